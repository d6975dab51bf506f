#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nsl/error.hpp"
#include "nsl/util.hpp"
#include "support.hpp"

using namespace nsl;

namespace {

const char* kDiag3 = R"J({"n": 3, "kind": "modified_hamiltonian", "H": "sqrt(p1^2 + 2*p2^2 + 3*p3^2)"})J";

Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    int i = 0;
    for (double a : v) out[i++] = a;
    return out;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an nsl::Error");
    return ErrorKind::Config;
}

// graph-like surfaces with random trigonometric terms, regular on [0,1]^2
Hypersurface random_surface(Rng& rng) {
    auto c = [&] { return std::to_string(rng.uniform(-0.3, 0.3)); };
    return make_surface(3,
                        {"y1 + " + c() + "*sin(y2)", "y2 + " + c() + "*cos(y1)",
                         c() + "*sin(y1)*cos(2*y2) + " + c() + "*y1*y2"},
                        {{0, 1}, {0, 1}}, {3, 3});
}

// d F_i/dy^j + dF_i/dnu F_j - (i <-> j) for the Pfaff right-hand side F, by central differences
double integrability_oracle(const LoadedSystem& L, const Hypersurface& s, const Vec& y, double nu) {
    auto F = [&](const Vec& yy, double v) { return pfaff_rhs(L.sys, L.conn, s, yy, v); };
    const double h = 1e-4;
    Vec F0 = F(y, nu);
    auto dy = [&](int j) {
        Vec a = y, b = y;
        a[j] += h;
        b[j] -= h;
        return Vec((F(a, nu) - F(b, nu)) / (2 * h));
    };
    Vec dnu = (F(y, nu + h) - F(y, nu - h)) / (2 * h);
    return dy(1)[0] + dnu[0] * F0[1] - dy(0)[1] - dnu[1] * F0[0];
}

Hypersurface with_grid(Hypersurface s, std::vector<int> g) {
    s.grid = std::move(g);
    return s;
}

double radius(const PhasePoint& q) {
    double r = 0.0;
    for (double v : q.x) r += v * v;
    return std::sqrt(r);
}

}  // namespace

TEST_CASE("line and circle frames") {
    auto id = fixture::load(fixture::sys_id2);
    auto line = fixture::surface(fixture::surf_line, 2);
    auto fl = surface_frame(id.sys, id.conn, line, vec({0.3}), 2.0);
    CHECK(fl.x[0] == 0.3);
    CHECK(fl.taus(0, 0) == 1.0);
    CHECK(fl.normal[0] == 0.0);
    CHECK(std::abs(fl.normal[1]) == 1.0);
    CHECK(std::abs(fl.b(0, 0)) < 1e-15);
    CHECK(fl.q.p[1] == 2.0 * fl.normal[1]);
    auto circle = fixture::surface(fixture::surf_circle, 2);
    for (const char* js : {fixture::sys_id2, fixture::sys_geo2}) {
        auto L = fixture::load(js);
        for (double y : {0.0, 1.0, 2.5, 4.0}) {
            auto f = surface_frame(L.sys, L.conn, circle, vec({y}), 1.0);
            // outward unit normal and b = -1 for the unit circle
            CHECK(f.normal[0] == doctest::Approx(std::cos(y)));
            CHECK(f.normal[1] == doctest::Approx(std::sin(y)));
            CHECK(f.b(0, 0) == doctest::Approx(-1.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("second fundamental form is symmetric") {
    Rng rng(4);
    std::vector<Hypersurface> surfaces = {fixture::surface(fixture::surf_sphere, 3)};
    for (int k = 0; k < 5; ++k) surfaces.push_back(random_surface(rng));
    for (const char* js : {fixture::sys_id3, fixture::sys_geo3, fixture::sys_aniso3, fixture::sys_bad3}) {
        auto L = fixture::load(js);
        for (const auto& s : surfaces) {
            auto f = surface_frame(L.sys, L.conn, s, vec({0.5, 0.7}), 1.3);
            CHECK(std::abs(f.b(0, 1) - f.b(1, 0)) <= 1e-12 * (1 + f.b.norm()));
            CHECK(f.normal.norm() == doctest::Approx(1.0));
            CHECK(std::abs(f.normal.dot(f.taus.col(0))) < 1e-12);
            CHECK(std::abs(f.normal.dot(f.taus.col(1))) < 1e-12);
        }
    }
    // the unit sphere for the identity system: b = -(first fundamental form)
    auto id = fixture::load(fixture::sys_id3);
    auto f = surface_frame(id.sys, id.conn, surfaces[0], vec({0.5, 0.7}), 1.0);
    Mat I = f.taus.transpose() * f.taus;
    CHECK(max_abs(Mat(f.b + I)) < 1e-12);
}

TEST_CASE("Pfaff right-hand side vanishes for straight-line shifts of round surfaces") {
    auto circle = fixture::surface(fixture::surf_circle, 2);
    auto sphere = fixture::surface(fixture::surf_sphere, 3);
    for (const char* js : {fixture::sys_id2, fixture::sys_geo2})
        for (double nu : {0.5, 1.0, 3.0}) {
            auto L = fixture::load(js);
            CHECK(max_abs(pfaff_rhs(L.sys, L.conn, circle, vec({1.2}), nu)) < 1e-14);
        }
    for (const char* js : {fixture::sys_id3, fixture::sys_geo3}) {
        auto L = fixture::load(js);
        CHECK(max_abs(pfaff_rhs(L.sys, L.conn, sphere, vec({0.4, 1.1}), 2.0)) < 1e-14);
    }
}

TEST_CASE("solve nu examples") {
    auto sphere = fixture::surface(fixture::surf_sphere, 3);
    auto geo = fixture::load(fixture::sys_geo3);
    auto g = solve_nu(geo.sys, geo.conn, sphere, 2.0);
    REQUIRE(g.nu.size() == 9);
    CHECK(g.counts == std::vector<int>{3, 3});
    for (double v : g.nu) CHECK(v == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(g.path_residual < 1e-12);
    CHECK(g.index({1, 2}) == 5);
    CHECK(g.nodes[5][0] == doctest::Approx(0.75));
    CHECK(g.nodes[5][1] == doctest::Approx(1.5));
    // compliant system with a nonconstant solution
    auto an = fixture::load(fixture::sys_aniso3);
    auto ga = solve_nu(an.sys, an.conn, with_grid(sphere, {9, 9}), 2.0);
    CHECK(ga.nu.front() == 2.0);
    CHECK(std::abs(ga.nu.back() - 2.0) > 0.1);
    CHECK(ga.path_residual < 1e-6);
    // starting elsewhere reaches the same field, up to the RK4 error of the 9x9 grid
    auto gc = solve_nu(an.sys, an.conn, with_grid(sphere, {9, 9}), ga.nu[ga.index({4, 4})], {4, 4});
    for (std::size_t k = 0; k < ga.nu.size(); ++k) CHECK(gc.nu[k] == doctest::Approx(ga.nu[k]).epsilon(1e-4));
    // SYS-BAD has no consistent nu
    auto bad = fixture::load(fixture::sys_bad3);
    CHECK(solve_nu(bad.sys, bad.conn, sphere, 2.0).path_residual > 1e-4);
}

TEST_CASE("path residual converges at high order for a compatible system") {
    auto sphere = fixture::surface(fixture::surf_sphere, 3);
    auto an = fixture::load(fixture::sys_aniso3);
    double coarse = solve_nu(an.sys, an.conn, with_grid(sphere, {5, 5}), 2.0).path_residual;
    double fine = solve_nu(an.sys, an.conn, with_grid(sphere, {9, 9}), 2.0).path_residual;
    CHECK(std::log2(coarse / fine) >= 3.5);
}

TEST_CASE("nu scales with its initial value for positively homogeneous Hamiltonians") {
    auto sphere = fixture::surface(fixture::surf_sphere, 3);
    auto L = fixture::load(kDiag3);
    auto a = solve_nu(L.sys, L.conn, sphere, 2.0);
    auto b = solve_nu(L.sys, L.conn, sphere, 6.0);
    for (std::size_t k = 0; k < a.nu.size(); ++k) CHECK(std::abs(b.nu[k] / a.nu[k] - 3.0) <= 1e-10);
}

TEST_CASE("compatibility residual") {
    auto sphere = fixture::surface(fixture::surf_sphere, 3);
    Rng rng(12);
    std::vector<Hypersurface> surfaces = {sphere, random_surface(rng), random_surface(rng)};
    for (const char* js : {fixture::sys_geo3, fixture::sys_aniso3, kDiag3, fixture::sys_bad3}) {
        auto L = fixture::load(js);
        for (const auto& s : surfaces) {
            for (double nu : {0.7, 1.3}) {
                auto y = vec({0.5, 0.7});
                Mat C = compatibility_residual(L.sys, L.conn, s, y, nu);
                CHECK(C(0, 0) == 0.0);
                CHECK(C(0, 1) == -C(1, 0));
                CHECK(std::abs(C(0, 1) - integrability_oracle(L, s, y, nu)) <= 1e-7 * (1 + std::abs(C(0, 1))));
            }
        }
    }
    auto bad = fixture::load(fixture::sys_bad3);
    CHECK(compatibility_residual(bad.sys, bad.conn, sphere, vec({0.5, 0.7}), 1.3)(0, 1) ==
          doctest::Approx(-0.337860).epsilon(5e-6));
    // one-parameter surfaces have nothing to be compatible with
    auto geo = fixture::load(fixture::sys_geo2);
    CHECK(compatibility_residual(geo.sys, geo.conn, fixture::surface(fixture::surf_circle, 2), vec({1}), 1).size() == 1);
}

TEST_CASE("normal shift examples") {
    auto circle = fixture::surface(fixture::surf_circle, 2);
    IntegratorConfig cfg{0.01, 0.5};
    struct Ex {
        const char* js;
        double nu, speed;
    };
    // SYS-ID moves at |p| = nu, SYS-GEO at 1/nu
    for (const Ex& e : {Ex{fixture::sys_id2, 1.0, 1.0}, Ex{fixture::sys_id2, 2.0, 2.0}, Ex{fixture::sys_geo2, 2.0, 0.5}}) {
        auto L = fixture::load(e.js);
        auto run = simulate_shift(L.sys, L.conn, circle, NuSource::fixed(e.nu), cfg);
        REQUIRE(run.trajectories.size() == 7);
        for (const auto& tr : run.trajectories) {
            CHECK(tr.back().t == 0.5);
            CHECK(radius(tr.back().q) == doctest::Approx(1.0 + 0.5 * e.speed).epsilon(1e-12));
        }
        auto rep = verify_orthogonality(run, 1e-6);
        CHECK(rep.normal);
        CHECK(rep.max_phi_overall < 1e-12);
        CHECK(rep.first_violation == -1.0);
    }
    auto bad = fixture::load(fixture::sys_bad2);
    auto run = simulate_shift(bad.sys, bad.conn, circle, NuSource::fixed(1.0), cfg);
    auto rep = verify_orthogonality(run, 1e-6);
    CHECK_FALSE(rep.normal);
    CHECK(rep.max_phi_overall > 1e-2);
    CHECK(rep.first_violation > 0.0);
    CHECK(rep.times.size() == run.trajectories[0].size());
}

TEST_CASE("shift of a sphere patch with solved nu stays orthogonal") {
    auto sphere = fixture::surface(fixture::surf_sphere, 3);
    auto an = fixture::load(fixture::sys_aniso3);
    auto grid = solve_nu(an.sys, an.conn, sphere, 2.0);
    auto run = simulate_shift(an.sys, an.conn, sphere, NuSource::solved(grid), IntegratorConfig{0.01, 0.3});
    CHECK(run.nus == grid.nu);
    // the solved nu carries the 3x3 grid's discretisation error into the initial data
    CHECK(verify_orthogonality(run, 1e-3).normal);
    auto fixed = simulate_shift(an.sys, an.conn, sphere, NuSource::fixed(2.0), IntegratorConfig{0.01, 0.3});
    CHECK(verify_orthogonality(fixed, 1e-3).max_phi_overall > 10 * verify_orthogonality(run, 1e-3).max_phi_overall);
}

TEST_CASE("thread count does not change the shift") {
    auto sphere = fixture::surface(fixture::surf_sphere, 3);
    auto bad = fixture::load(fixture::sys_bad3);
    IntegratorConfig cfg{0.05, 0.5};
    auto a = simulate_shift(bad.sys, bad.conn, sphere, NuSource::fixed(1.5), cfg, 1);
    auto b = simulate_shift(bad.sys, bad.conn, sphere, NuSource::fixed(1.5), cfg, 4);
    CHECK(shift_csv(a) == shift_csv(b));
}

TEST_CASE("orthogonality report edge cases") {
    ShiftRun empty;
    auto r = verify_orthogonality(empty, 1e-6);
    CHECK(r.normal);
    CHECK(r.times.empty());
    CHECK(r.max_phi_overall == 0.0);
    // a single recorded state at t = 0 with phi = 0.5
    ShiftRun one;
    one.n = 2;
    ExtendedState s;
    s.q = fixture::point({0, 0}, {1, 0});
    s.taus = {vec({0.5, 1.0})};
    s.xis = {vec({0, 0})};
    one.trajectories = {{s}};
    one.ys = {vec({0})};
    one.nus = {1.0};
    auto r1 = verify_orthogonality(one, 0.1);
    CHECK_FALSE(r1.normal);
    CHECK(r1.first_violation == 0.0);
    CHECK(r1.max_phi_overall == 0.5);
    CHECK(verify_orthogonality(one, 0.5).normal);
}

TEST_CASE("shift CSV layouts") {
    auto sphere = fixture::surface(fixture::surf_sphere, 3);
    auto geo = fixture::load(fixture::sys_geo3);
    auto run = simulate_shift(geo.sys, geo.conn, sphere, NuSource::fixed(1.0), IntegratorConfig{0.25, 0.5});
    auto csv = shift_csv(run);
    CHECK(csv.rfind("y1,y2,t,x1,x2,x3,p1,p2,p3,phi_1,phi_2\n", 0) == 0);
    // 9 nodes x 3 recorded times plus the header
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 28);
    auto tr = trajectory_csv(run.trajectories[0]);
    CHECK(tr.rfind("t,x1,x2,x3,p1,p2,p3,tau1_1,tau1_2,tau1_3,tau2_1,tau2_2,tau2_3,xi1_1,xi1_2,xi1_3,xi2_1,xi2_2,xi2_3,"
                   "phi_1,phi_2\n",
                   0) == 0);
    CHECK(trajectory_csv({}).empty());
}

TEST_CASE("surface and solver errors") {
    auto geo = fixture::load(fixture::sys_geo3);
    auto sphere = fixture::surface(fixture::surf_sphere, 3);
    CHECK(kind_of([&] { surface_frame(geo.sys, geo.conn, sphere, vec({0.5, 0.5}), 0.0); }) == ErrorKind::NuVanished);
    CHECK(kind_of([&] { solve_nu(geo.sys, geo.conn, sphere, 1e-12); }) == ErrorKind::NuVanished);
    auto flat = make_surface(3, {"y1", "y1", "y2"}, {{0, 1}, {0, 1}}, {2, 2});
    auto fold = make_surface(3, {"y1", "2*y1", "0"}, {{0, 1}, {0, 1}}, {2, 2});
    CHECK_NOTHROW(surface_frame(geo.sys, geo.conn, flat, vec({0.5, 0.5}), 1.0));
    CHECK(kind_of([&] { surface_frame(geo.sys, geo.conn, fold, vec({0.5, 0.5}), 1.0); }) ==
          ErrorKind::RankDeficientTangents);
    auto grid = solve_nu(geo.sys, geo.conn, sphere, 1.0);
    // a solved nu brings its own node counts
    auto run = simulate_shift(geo.sys, geo.conn, with_grid(sphere, {4, 4}), NuSource::solved(grid), {0.1, 0.1});
    CHECK(run.ys.size() == 9);
    auto moved = sphere;
    moved.domain[0].second = 1.3;
    CHECK(kind_of([&] { simulate_shift(geo.sys, geo.conn, moved, NuSource::solved(grid), {0.1, 0.1}); }) ==
          ErrorKind::GridMismatch);
    std::vector<int> counts = {3};
    CHECK(kind_of([&] { grid_nodes(sphere, counts); }) == ErrorKind::GridMismatch);
    CHECK(kind_of([&] { make_surface(3, {"y1", "y2"}, {{0, 1}, {0, 1}}, {2, 2}); }) == ErrorKind::Config);
    CHECK(kind_of([&] { make_surface(3, {"y1", "y2", "0"}, {{1, 0}, {0, 1}}, {2, 2}); }) == ErrorKind::Config);
    CHECK(kind_of([&] { make_surface(3, {"y1", "y2", "0"}, {{0, 1}, {0, 1}}, {0, 2}); }) == ErrorKind::Config);
    CHECK(kind_of([&] { make_surface(3, {"y1", "y3", "0"}, {{0, 1}, {0, 1}}, {2, 2}); }) == ErrorKind::Parse);
    CHECK(kind_of([&] { load_surface_json(fixture::surf_circle, 3); }) == ErrorKind::Config);
}
