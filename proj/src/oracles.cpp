#include "nsl/oracles.hpp"

#include <cmath>

#include "nsl/error.hpp"

namespace nsl {

std::vector<double> invert_velocity(const SystemDefinition& sys, const std::vector<double>& x, const Vec& v,
                                    std::vector<double> p) {
    int n = sys.n();
    for (int it = 0; it < 60; ++it) {
        PhasePoint q{x, p};
        std::vector<Jet> V, T;
        sys.jets(q, 1, 0, V, T);
        Vec r(n);
        Mat J(n, n);
        for (int i = 0; i < n; ++i) {
            r[i] = V[i].value() - v[i];
            for (int k = 0; k < n; ++k) J(i, k) = V[i].coef(1 + n + k);
        }
        Vec dp = J.partialPivLu().solve(r);
        for (int i = 0; i < n; ++i) p[i] -= dp[i];
        double scale = 1.0;
        for (double c : p) scale = std::max(scale, std::abs(c));
        if (dp.cwiseAbs().maxCoeff() <= 1e-15 * scale) break;
    }
    return p;
}

Tensor3 connection_oracle(const SystemDefinition& sys, const PhasePoint& q) {
    int n = sys.n();
    Vec v0 = sys.velocity(q);
    auto Phi = [&](const Vec& v) {
        auto p = invert_velocity(sys, q.x, v, q.p);
        return phi_pullback(sys, PhasePoint{q.x, p});
    };
    double base = 0.02 * v0.norm();
    // mixed second difference, step h
    auto second = [&](int i, int j, double h) {
        Vec a = v0, b = v0, c = v0, d = v0;
        a[i] += h, a[j] += h;
        b[i] += h, b[j] -= h;
        c[i] -= h, c[j] += h;
        d[i] -= h, d[j] -= h;
        return Vec((Phi(a) - Phi(b) - Phi(c) + Phi(d)) / (4 * h * h));
    };
    Tensor3 G(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            Vec d1 = second(i, j, base), d2 = second(i, j, base / 2), d3 = second(i, j, base / 4);
            Vec r1 = (4 * d2 - d1) / 3, r2 = (4 * d3 - d2) / 3;
            Vec r = (16 * r2 - r1) / 15;
            for (int k = 0; k < n; ++k) G(k, i, j) = G(k, j, i) = -0.5 * r[k];
        }
    return G;
}

SystemDefinition hamiltonian_partner(const Expression& W, int n) {
    return build_modified_hamiltonian(
        [W, n](const std::vector<Jet>& vars) {
            Jet s = vars[n] * vars[n];
            for (int i = 1; i < n; ++i) s += vars[n + i] * vars[n + i];
            std::vector<Jet> in(vars.begin(), vars.begin() + n);
            in.push_back(reciprocal(jet_sqrt(s)));
            return W.eval(std::span<const Jet>(in));
        },
        n, "modified_hamiltonian(W(x, 1/|p|))");
}

namespace {

double w_slope(const Expression& W, const std::vector<double>& x, const std::vector<double>& vel) {
    int n = static_cast<int>(x.size());
    double s = 0.0;
    for (double c : vel) s += c * c;
    std::vector<Jet> in;
    for (int i = 0; i < n; ++i) in.push_back(Jet(n + 1, 1, x[i]));
    in.push_back(Jet::variable(n + 1, 1, n, std::sqrt(s)));
    return W.eval(std::span<const Jet>(in)).d(n).value();
}

}  // namespace

double riemannian_hamiltonian_gap(const Expression& W, int n, const std::vector<double>& x0,
                                  const std::vector<double>& v0, const IntegratorConfig& cfg) {
    auto newton = build_riemannian_euclidean(W, parse_expression("0", riemannian_h_scope()), n);
    auto ham = hamiltonian_partner(W, n);
    double v2 = 0.0;
    for (double c : v0) v2 += c * c;
    ExtendedState a, b;
    a.q = {x0, v0};
    b.q.x = x0;
    for (double c : v0) b.q.p.push_back(c / v2);
    auto ta = integrate(newton, ConnectionField::zero(n), a, cfg);
    // the two flows only correspond while dW/dv keeps its sign
    double s0 = w_slope(W, x0, v0);
    for (const auto& st : ta)
        if (w_slope(W, st.q.x, st.q.p) * s0 <= 0.0)
            throw Error(ErrorKind::ZeroWv, "dW/dv changes sign along the trajectory");
    auto tb = integrate(ham, ConnectionField::zero(n), b, cfg);
    double gap = 0.0;
    for (std::size_t k = 0; k < ta.size() && k < tb.size(); ++k)
        for (int i = 0; i < n; ++i) gap = std::max(gap, std::abs(ta[k].q.x[i] - tb[k].q.x[i]));
    return gap;
}

double system_probe_gap(const SystemDefinition& sys, const PhasePoint& q, double h) {
    int n = sys.n();
    std::vector<Jet> V, T;
    sys.jets(q, 2, 2, V, T);
    auto at = [&](const std::vector<double>& flat) {
        PhasePoint r;
        r.x.assign(flat.begin(), flat.begin() + n);
        r.p.assign(flat.begin() + n, flat.end());
        Vec out(2 * n);
        out << sys.velocity(r), sys.force(r);
        return out;
    };
    std::vector<double> base = q.flat();
    // momentum steps follow |p|, the scale on which V and Theta vary near p = 0
    double pn = 0.0;
    for (double c : q.p) pn += c * c;
    std::vector<double> hs(2 * n, h);
    for (int a = n; a < 2 * n; ++a) hs[a] = h * std::sqrt(pn);
    // central differences at steps s and s/2, combined to cancel the s^2 term
    auto first = [&](int a, double s) {
        auto pa = base, ma = base;
        pa[a] += s * hs[a];
        ma[a] -= s * hs[a];
        return Vec((at(pa) - at(ma)) / (2 * s * hs[a]));
    };
    auto second = [&](int a, int b, double s) {
        double ha = s * hs[a], hb = s * hs[b];
        auto pp = base, pm = base, mp = base, mm = base;
        pp[a] += ha, pp[b] += hb;
        pm[a] += ha, pm[b] -= hb;
        mp[a] -= ha, mp[b] += hb;
        mm[a] -= ha, mm[b] -= hb;
        return Vec((at(pp) - at(pm) - at(mp) + at(mm)) / (4 * ha * hb));
    };
    auto richardson = [](const Vec& coarse, const Vec& fine) { return Vec((4 * fine - coarse) / 3); };
    double worst = 0.0;
    auto check = [&](double jet, double fd) {
        worst = std::max(worst, std::abs(jet - fd) / std::max(1.0, std::abs(jet)));
    };
    for (int a = 0; a < 2 * n; ++a) {
        Vec d1 = richardson(first(a, 1.0), first(a, 0.5));
        for (int c = 0; c < 2 * n; ++c) check((c < n ? V[c] : T[c - n]).partial({a}), d1[c]);
        for (int b = a; b < 2 * n; ++b) {
            Vec d2 = richardson(second(a, b, 1.0), second(a, b, 0.5));
            for (int c = 0; c < 2 * n; ++c) check((c < n ? V[c] : T[c - n]).partial({a, b}), d2[c]);
        }
    }
    return worst;
}

}  // namespace nsl
