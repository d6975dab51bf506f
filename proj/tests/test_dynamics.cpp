#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nsl/util.hpp"
#include "support.hpp"

using namespace nsl;
using fixture::point;

namespace {

ExtendedState start(const PhasePoint& q, std::vector<Vec> taus, std::vector<Vec> xis) {
    ExtendedState s;
    s.q = q;
    s.taus = std::move(taus);
    s.xis = std::move(xis);
    return s;
}

Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    int i = 0;
    for (double a : v) out[i++] = a;
    return out;
}

Vec random_vec(Rng& rng, int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.uniform(-1, 1);
    return v;
}

std::vector<PhasePoint> cloud(int n, int count, std::uint64_t seed) {
    SamplerSpec s;
    s.count = count;
    s.seed = seed;
    s.p_min = 0.5;
    s.p_max = 3.0;
    return sample_points(n, s);
}

// sum_kj Gamma^k_ij p_k tau^j
Vec gamma_p_tau(const Tensor3& G, const std::vector<double>& p, const Vec& tau) {
    int n = G.n;
    Vec out = Vec::Zero(n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j) out[i] += G(k, i, j) * p[k] * tau[j];
    return out;
}

// phi-dot at state s for variation a
double phi_rate(const SystemDefinition& sys, const ConnectionField& conn, const ExtendedState& s, int a = 0) {
    return deviation_rate(local_geometry(sys, conn, s.q), s.taus[a], s.xis[a]);
}

struct Case {
    const char* json;
    const char* name;
};

const Case kSystems[] = {{fixture::sys_geo2, "geo2"},   {fixture::sys_bad2, "bad2"},
                         {fixture::sys_geo3, "geo3"},   {fixture::sys_aniso3, "aniso3"},
                         {fixture::sys_bad3, "bad3"}};

}  // namespace

TEST_CASE("phase rhs examples") {
    auto geo = fixture::load(fixture::sys_geo2);
    auto r = phase_rhs(geo.sys, point({0, 0}, {3, 4}));
    CHECK(r.dx[0] == doctest::Approx(0.12));
    CHECK(r.dx[1] == doctest::Approx(0.16));
    CHECK(max_abs(r.dp) == 0.0);
    CHECK(r.dtau.empty());
    auto bad = fixture::load(fixture::sys_bad2);
    auto b = phase_rhs(bad.sys, point({0, 0}, {1, 2}));
    CHECK(b.dx[0] == 1.0);
    CHECK(b.dx[1] == 2.0);
    CHECK(b.dp[0] == 4.0);
    CHECK(b.dp[1] == 0.0);
}

TEST_CASE("identity system: variations move linearly") {
    auto id = fixture::load(fixture::sys_id3);
    auto s0 = start(point({0, 0, 0}, {1, 2, 3}), {vec({1, 0, 0}), vec({0, 1, -1})}, {vec({0.5, 0, 0}), vec({0, 0, 2})});
    auto rate = variational_rhs(id.sys, id.conn, s0);
    CHECK(max_abs(Vec(rate.dtau[0] - s0.xis[0])) < 1e-15);
    CHECK(max_abs(rate.dxi[1]) < 1e-15);
    auto tr = integrate(id.sys, id.conn, s0, IntegratorConfig{0.1, 2.0});
    const auto& e = tr.back();
    CHECK(e.t == 2.0);
    for (int a = 0; a < 2; ++a) {
        CHECK(max_abs(Vec(e.taus[a] - (s0.taus[a] + 2.0 * s0.xis[a]))) < 1e-13);
        CHECK(max_abs(Vec(e.xis[a] - s0.xis[a])) < 1e-15);
    }
    CHECK(e.q.x[2] == doctest::Approx(6.0));
}

TEST_CASE("zero variation stays zero") {
    for (const auto& c : kSystems) {
        auto L = fixture::load(c.json);
        int n = L.sys.n();
        auto q = cloud(n, 1, 3)[0];
        auto tr = integrate(L.sys, L.conn, start(q, {Vec::Zero(n)}, {Vec::Zero(n)}), IntegratorConfig{0.05, 0.5});
        for (const auto& s : tr) {
            CHECK(max_abs(s.taus[0]) == 0.0);
            CHECK(max_abs(s.xis[0]) == 0.0);
        }
    }
}

TEST_CASE("integrator step bookkeeping") {
    auto geo = fixture::load(fixture::sys_geo2);
    auto tr = integrate(geo.sys, geo.conn, start(point({0, 0}, {1, 0}), {}, {}), IntegratorConfig{0.3, 1.0});
    REQUIRE(tr.size() == 5);
    CHECK(tr[0].t == 0.0);
    CHECK(tr[1].t == doctest::Approx(0.3));
    CHECK(tr[3].t == doctest::Approx(0.9));
    CHECK(tr[4].t == 1.0);
    // unit-speed straight line: V = p / |p|^2
    CHECK(tr[4].q.x[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(tr[4].q.x[1] == 0.0);
}

TEST_CASE("variational equations match a finite-difference trajectory pair") {
    const double eps = 1e-6;
    IntegratorConfig cfg{0.01, 1.0};
    Rng rng(5);
    std::vector<std::pair<LoadedSystem, std::string>> list;
    for (const auto& c : kSystems) list.push_back({fixture::load(c.json), c.name});
    // a connection with x and p dependence that is not the canonical one
    auto aniso = fixture::load(fixture::sys_aniso3);
    list.push_back({LoadedSystem{aniso.sys, add_gauge(aniso.conn, GaugeTensor::random(3, 77)), {}, {}}, "gauged"});
    for (const auto& [L, name] : list) {
        int n = L.sys.n();
        for (const auto& q : cloud(n, 3, 11)) {
            Vec tau = random_vec(rng, n), xi = random_vec(rng, n);
            auto base = integrate(L.sys, L.conn, start(q, {tau}, {xi}), cfg);
            Vec dp = xi + gamma_p_tau(L.conn.at(q), q.p, tau);
            auto moved = [&](double sgn) {
                PhasePoint m = q;
                for (int i = 0; i < n; ++i) {
                    m.x[i] += sgn * eps * tau[i];
                    m.p[i] += sgn * eps * dp[i];
                }
                return integrate(L.sys, L.conn, start(m, {}, {}), cfg);
            };
            auto plus = moved(1), minus = moved(-1);
            REQUIRE(plus.size() == base.size());
            double worst = 0.0;
            for (std::size_t k = 0; k < base.size(); k += 10) {
                Vec tfd(n), pfd(n);
                for (int i = 0; i < n; ++i) {
                    tfd[i] = (plus[k].q.x[i] - minus[k].q.x[i]) / (2 * eps);
                    pfd[i] = (plus[k].q.p[i] - minus[k].q.p[i]) / (2 * eps);
                }
                Vec xfd = pfd - gamma_p_tau(L.conn.at(base[k].q), base[k].q.p, tfd);
                double scale = 1.0 + max_abs(base[k].taus[0]) + max_abs(base[k].xis[0]);
                worst = std::max(worst, max_abs(Vec(tfd - base[k].taus[0])) / scale);
                worst = std::max(worst, max_abs(Vec(xfd - base[k].xis[0])) / scale);
            }
            CHECK_MESSAGE(worst <= 5 * eps, name);
        }
    }
}

TEST_CASE("RK4 converges at fourth order") {
    auto L = fixture::load(fixture::sys_aniso3);
    auto s0 = start(point({0.1, 0.2, -0.3}, {1.0, 0.5, -0.7}), {vec({1, 0, 0.5})}, {vec({0, 1, 0})});
    auto final_state = [&](double h) { return integrate(L.sys, L.conn, s0, IntegratorConfig{h, 1.0}).back(); };
    auto ref = final_state(0.0025);
    auto err = [&](double h) {
        auto e = final_state(h);
        double w = 0.0;
        for (int i = 0; i < 3; ++i) {
            w = std::max(w, std::abs(e.q.x[i] - ref.q.x[i]));
            w = std::max(w, std::abs(e.q.p[i] - ref.q.p[i]));
        }
        w = std::max(w, max_abs(Vec(e.taus[0] - ref.taus[0])));
        return std::max(w, max_abs(Vec(e.xis[0] - ref.xis[0])));
    };
    double e1 = err(0.04), e2 = err(0.02);
    CHECK(e1 > 0.0);
    CHECK(e1 / e2 >= 12.0);
}

TEST_CASE("variations are linear in their initial data") {
    Rng rng(8);
    for (const auto& c : kSystems) {
        auto L = fixture::load(c.json);
        int n = L.sys.n();
        auto q = cloud(n, 1, 21)[0];
        Vec ta = random_vec(rng, n), tb = random_vec(rng, n), xa = random_vec(rng, n), xb = random_vec(rng, n);
        double a = 0.7, b = -1.3;
        auto tr = integrate(L.sys, L.conn, start(q, {ta, tb, a * ta + b * tb}, {xa, xb, a * xa + b * xb}),
                            IntegratorConfig{0.01, 1.0});
        for (const auto& s : tr) {
            CHECK(max_abs(Vec(s.taus[2] - a * s.taus[0] - b * s.taus[1])) <= 1e-9);
            CHECK(max_abs(Vec(s.xis[2] - a * s.xis[0] - b * s.xis[1])) <= 1e-9);
        }
    }
}

TEST_CASE("deviation examples") {
    auto s = start(point({0, 0}, {3, 4}), {vec({1, 0}), vec({0.5, 0.5}), vec({4, -3})}, {vec({0, 0}), vec({0, 0}), vec({0, 0})});
    auto phi = deviation(s);
    REQUIRE(phi.size() == 3);
    CHECK(phi[0] == 3.0);
    CHECK(phi[1] == 3.5);
    CHECK(phi[2] == 0.0);
}

TEST_CASE("deviation rate matches the derivative of the deviation") {
    Rng rng(13);
    for (const auto& c : kSystems) {
        auto L = fixture::load(c.json);
        int n = L.sys.n();
        for (const auto& q : cloud(n, 3, 31)) {
            auto tr = integrate(L.sys, L.conn, start(q, {random_vec(rng, n)}, {random_vec(rng, n)}),
                                IntegratorConfig{1e-3, 0.2});
            for (std::size_t k = 1; k + 1 < tr.size(); k += 50) {
                double fd = (deviation(tr[k + 1])[0] - deviation(tr[k - 1])[0]) / (tr[k + 1].t - tr[k - 1].t);
                double r = phi_rate(L.sys, L.conn, tr[k]);
                CHECK_MESSAGE(std::abs(fd - r) <= 1e-5 * (1 + std::abs(r)), c.name);
            }
        }
    }
}

TEST_CASE("weak fields of the identity system vanish") {
    auto id = fixture::load(fixture::sys_id3);
    for (const auto& q : cloud(3, 10, 1)) {
        auto w = weak_fields(id.sys, id.conn, q);
        CHECK(max_abs(w.U) == 0.0);
        CHECK(max_abs(w.alpha) == 0.0);
        CHECK(max_abs(w.beta) == 0.0);
        CHECK(max_abs(w.eta) == 0.0);
        CHECK(w.A == 0.0);
        CHECK(w.B == 0.0);
    }
}

TEST_CASE("weak field scalars") {
    for (const auto& c : kSystems) {
        auto L = fixture::load(c.json);
        for (const auto& q : cloud(L.sys.n(), 5, 2)) {
            auto g = local_geometry(L.sys, L.conn, q);
            auto w = weak_fields(g);
            Eigen::Map<const Vec> p(q.p.data(), g.n);
            CHECK(w.A * g.frame.Omega == doctest::Approx(p.dot(w.alpha)).epsilon(1e-12));
            CHECK(w.B * g.frame.Omega == doctest::Approx(w.eta.dot(g.frame.W)).epsilon(1e-12));
            CHECK(max_abs(Vec(w.eta - (w.beta - w.A * w.U))) <= 1e-12 * (1 + max_abs(w.beta)));
        }
    }
}

TEST_CASE("second derivative of the deviation is alpha.xi + beta.tau") {
    Rng rng(3);
    for (const auto& c : kSystems) {
        auto L = fixture::load(c.json);
        int n = L.sys.n();
        for (const auto& q : cloud(n, 5, 41)) {
            Vec tau = random_vec(rng, n), xi = random_vec(rng, n);
            // central difference of phi-dot about the midpoint of a short forward run
            const double h = 1e-4;
            auto tr = integrate(L.sys, L.conn, start(q, {tau}, {xi}), IntegratorConfig{h / 4, 2 * h});
            REQUIRE(tr.size() == 9);
            const auto& mid = tr[4];
            auto w = weak_fields(L.sys, L.conn, mid.q);
            double expect = w.alpha.dot(mid.xis[0]) + w.beta.dot(mid.taus[0]);
            double fd = (phi_rate(L.sys, L.conn, tr[8]) - phi_rate(L.sys, L.conn, tr[0])) / (2 * h);
            CHECK_MESSAGE(std::abs(fd - expect) <= 1e-6 * (1 + std::abs(expect)), c.name);
        }
    }
}

TEST_CASE("compliant systems obey the deviation ODE; SYS-BAD does not") {
    Rng rng(17);
    auto ode_gap = [&](const LoadedSystem& L, const PhasePoint& q) {
        int n = L.sys.n();
        auto tr = integrate(L.sys, L.conn, start(q, {random_vec(rng, n)}, {random_vec(rng, n)}),
                            IntegratorConfig{2.5e-4, 0.3});
        double worst = 0.0;
        for (std::size_t k = 1; k + 1 < tr.size(); k += 120) {
            double r0 = phi_rate(L.sys, L.conn, tr[k - 1]), r2 = phi_rate(L.sys, L.conn, tr[k + 1]);
            double acc = (r2 - r0) / (tr[k + 1].t - tr[k - 1].t);
            auto w = weak_fields(L.sys, L.conn, tr[k].q);
            double rhs = w.A * phi_rate(L.sys, L.conn, tr[k]) + w.B * deviation(tr[k])[0];
            worst = std::max(worst, std::abs(acc - rhs) / (1 + std::abs(rhs)));
        }
        return worst;
    };
    for (const char* js : {fixture::sys_geo2, fixture::sys_geo3, fixture::sys_aniso3}) {
        auto L = fixture::load(js);
        for (const auto& q : cloud(L.sys.n(), 3, 51)) CHECK(ode_gap(L, q) <= 1e-5);
    }
    auto bad = fixture::load(fixture::sys_bad3);
    double worst = 0.0;
    for (const auto& q : cloud(3, 3, 51)) worst = std::max(worst, ode_gap(bad, q));
    CHECK(worst > 1e-2);
}
