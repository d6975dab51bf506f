#include "nsl/system.hpp"

#include <cmath>

#include "nsl/error.hpp"

namespace nsl {

SystemDefinition::SystemDefinition(int n, SystemKind kind, Evaluator ev, std::string label)
    : n_(n), kind_(kind), ev_(std::move(ev)), label_(std::move(label)) {
    if (n < 2) throw Error(ErrorKind::Config, "dimension must be at least 2");
}

void SystemDefinition::jets(const PhasePoint& q, int ov, int ot, std::vector<Jet>& V,
                            std::vector<Jet>& Th) const {
    if (q.n() != n_ || static_cast<int>(q.p.size()) != n_)
        throw std::invalid_argument("phase point dimension mismatch");
    ev_(q, ov, ot, V, Th);
}

Vec SystemDefinition::velocity(const PhasePoint& q) const {
    std::vector<Jet> V, T;
    jets(q, 0, 0, V, T);
    Vec v(n_);
    for (int i = 0; i < n_; ++i) v[i] = V[i].value();
    return v;
}

Vec SystemDefinition::force(const PhasePoint& q) const {
    std::vector<Jet> V, T;
    jets(q, 0, 0, V, T);
    Vec t(n_);
    for (int i = 0; i < n_; ++i) t[i] = T[i].value();
    return t;
}

namespace {

void fit(std::vector<Jet>& v, int order) {
    for (auto& j : v) j = j.truncated(order);
}

}  // namespace

SystemDefinition make_explicit(int n, std::vector<Expression> V, std::vector<Expression> Theta,
                               std::string label) {
    if (static_cast<int>(V.size()) != n || static_cast<int>(Theta.size()) != n)
        throw Error(ErrorKind::Config, "V and Theta need exactly n components");
    for (const auto& e : V)
        if (e.slots() != 2 * n) throw Error(ErrorKind::Config, "V component not over phase space");
    for (const auto& e : Theta)
        if (e.slots() != 2 * n) throw Error(ErrorKind::Config, "Theta component not over phase space");
    auto ev = [n, V = std::move(V), T = std::move(Theta)](const PhasePoint& q, int ov, int ot,
                                                            std::vector<Jet>& Vo, std::vector<Jet>& To) {
        Vo.clear();
        To.clear();
        auto vars = phase_variables(q, std::max(ov, ot));
        for (int i = 0; i < n; ++i) Vo.push_back(V[i].eval(std::span<const Jet>(vars)).truncated(ov));
        for (int i = 0; i < n; ++i) To.push_back(T[i].eval(std::span<const Jet>(vars)).truncated(ot));
    };
    return SystemDefinition(n, SystemKind::Explicit, ev, std::move(label));
}

SystemDefinition build_modified_hamiltonian(HamiltonianFn H, int n, std::string label) {
    auto ev = [n, H](const PhasePoint& q, int ov, int ot, std::vector<Jet>& V, std::vector<Jet>& T) {
        int K = std::max(ov, ot);
        auto vars = phase_variables(q, K + 1);
        Jet h = H(vars);
        Jet den(2 * n, K, 0.0);
        std::vector<Jet> hp;
        double pn = 0.0, hn = 0.0;
        for (int i = 0; i < n; ++i) {
            hp.push_back(h.d(n + i));
            den += vars[n + i].truncated(K) * hp.back();
            pn += q.p[i] * q.p[i];
            hn += hp.back().value() * hp.back().value();
        }
        if (!(std::abs(den.value()) >= 1e-12 * std::sqrt(pn * hn)) || hn == 0.0)
            throw Error(ErrorKind::DegenerateOmega, "<p|dH/dp> vanishes at this point");
        Jet inv = reciprocal(den);
        V.clear();
        T.clear();
        for (int i = 0; i < n; ++i) V.push_back(hp[i] * inv);
        for (int i = 0; i < n; ++i) T.push_back(-(h.d(i) * inv));
        fit(V, ov);
        fit(T, ot);
    };
    return SystemDefinition(n, SystemKind::ModifiedHamiltonian, ev, std::move(label));
}

SystemDefinition build_modified_hamiltonian(const Expression& H, int n) {
    if (H.slots() != 2 * n) throw Error(ErrorKind::Config, "H must be over x1..xn, p1..pn");
    return build_modified_hamiltonian([H](const std::vector<Jet>& vars) { return H.eval(std::span<const Jet>(vars)); },
                                      n, "modified_hamiltonian(" + H.text() + ")");
}

Scope riemannian_w_scope(int n) {
    Scope s;
    s.family('x', n).single("v");
    return s;
}

Scope riemannian_h_scope() {
    Scope s;
    s.single("w");
    return s;
}

SystemDefinition build_riemannian_euclidean(const Expression& Wf, const Expression& h, int n) {
    if (Wf.slots() != n + 1) throw Error(ErrorKind::Config, "W must be over x1..xn, v");
    if (h.slots() != 1) throw Error(ErrorKind::Config, "h must be over w");
    auto ev = [n, Wf, h](const PhasePoint& q, int ov, int ot, std::vector<Jet>& V, std::vector<Jet>& T) {
        int K = ot;
        auto vars = phase_variables(q, std::max(ov, ot));
        V.assign(vars.begin() + n, vars.end());
        fit(V, ov);
        // |p| as a jet
        Jet v2(2 * n, K, 0.0);
        for (int i = 0; i < n; ++i) v2 += vars[n + i].truncated(K) * vars[n + i].truncated(K);
        Jet v = jet_sqrt(v2);
        // Taylor polynomial of W about (x0, |p0|), one order higher for its gradient
        std::vector<Jet> wvars;
        for (int i = 0; i < n; ++i) wvars.push_back(Jet::variable(n + 1, K + 1, i, q.x[i]));
        wvars.push_back(Jet::variable(n + 1, K + 1, n, v.value()));
        Jet Wpoly = Wf.eval(std::span<const Jet>(wvars));
        std::vector<Jet> inner;
        for (int i = 0; i < n; ++i) inner.push_back(vars[i].truncated(K));
        inner.push_back(v);
        Jet Wv = compose(Wpoly.d(n), inner);
        if (std::abs(Wv.value()) < 1e-12) throw Error(ErrorKind::ZeroWv, "dW/dv vanishes at this point");
        std::vector<Jet> Wx;
        for (int k = 0; k < n; ++k) Wx.push_back(compose(Wpoly.d(k), inner));
        Jet Wval = compose(Wpoly.truncated(K), inner);
        Jet hpoly = h.eval(std::vector<Jet>{Jet::variable(1, K, 0, Wval.value())});
        Jet hv = compose(hpoly, std::vector<Jet>{Wval});
        Jet inv = reciprocal(Wv * v);
        // F_i = [h p_i - sum_k Wx_k (2 p_k p_i - |p|^2 delta_ki)] / (W_v |p|)
        Jet pw(2 * n, K, 0.0);
        for (int k = 0; k < n; ++k) pw += Wx[k] * vars[n + k].truncated(K);
        T.clear();
        for (int i = 0; i < n; ++i) {
            Jet pi = vars[n + i].truncated(K);
            T.push_back((hv * pi - 2.0 * pw * pi + v2 * Wx[i]) * inv);
        }
    };
    return SystemDefinition(n, SystemKind::RiemannianEuclidean, ev,
                            "riemannian_euclidean(W=" + Wf.text() + ", h=" + h.text() + ")");
}

double relative_det(const Mat& g) {
    double bound = 1.0;
    for (Eigen::Index i = 0; i < g.rows(); ++i) bound *= g.row(i).norm();
    return bound > 0.0 ? std::abs(g.determinant()) / bound : 0.0;
}

double relative_omega(const Vec& p, const Vec& W) {
    double bound = p.norm() * W.norm();
    return bound > 0.0 ? std::abs(p.dot(W)) / bound : 0.0;
}

void require_regular_metric(const Mat& g_up) {
    if (!(relative_det(g_up) >= 1e-12))
        throw Error(ErrorKind::SingularMetric, "det g_up = " + std::to_string(g_up.determinant()));
}

void require_nondegenerate_omega(const Vec& p, const Vec& W) {
    if (!(relative_omega(p, W) >= 1e-12)) throw Error(ErrorKind::DegenerateOmega, "Omega vanishes at this point");
}

KinematicFrame frame_at(const SystemDefinition& sys, const PhasePoint& q) {
    int n = sys.n();
    std::vector<Jet> V, T;
    sys.jets(q, 1, 0, V, T);
    KinematicFrame f;
    f.V.resize(n);
    f.g_up.resize(n, n);
    for (int i = 0; i < n; ++i) {
        f.V[i] = V[i].value();
        for (int r = 0; r < n; ++r) f.g_up(i, r) = V[i].coef(1 + n + r);
    }
    require_regular_metric(f.g_up);
    f.g_down = f.g_up.inverse();
    Eigen::Map<const Vec> p(q.p.data(), n);
    f.W = f.g_up.transpose() * p;
    f.Omega = p.dot(f.W);
    require_nondegenerate_omega(p, f.W);
    f.P = Mat::Identity(n, n) - f.W * p.transpose() / f.Omega;
    return f;
}

RegularityReport check_regularity(const SystemDefinition& sys, const std::vector<PhasePoint>& samples,
                                  double tol) {
    RegularityReport rep;
    rep.pass = !samples.empty();
    for (const auto& q : samples) {
        RegularitySample s;
        s.q = q;
        try {
            int n = sys.n();
            std::vector<Jet> V, T;
            sys.jets(q, 1, 0, V, T);
            Mat g(n, n);
            Vec v(n);
            for (int i = 0; i < n; ++i) {
                v[i] = V[i].value();
                for (int r = 0; r < n; ++r) g(i, r) = V[i].coef(1 + n + r);
            }
            s.det = g.determinant();
            s.metric_ok = relative_det(g) >= tol;
            // V must not vanish at the sample, nor along its ray toward p = 0
            s.vnorm = v.norm();
            s.velocity_ok = s.vnorm > tol;
            for (double scale : {0.5, 0.1, 0.01}) {
                PhasePoint r = q;
                for (double& c : r.p) c *= scale;
                s.velocity_ok = s.velocity_ok && sys.velocity(r).norm() > tol;
            }
            Eigen::Map<const Vec> p(q.p.data(), n);
            Vec W = g.transpose() * p;
            s.omega = p.dot(W);
            s.omega_ok = relative_omega(p, W) >= tol;
        } catch (const Error& e) {
            s.error = e.what();
        }
        rep.pass = rep.pass && s.ok();
        rep.samples.push_back(std::move(s));
    }
    return rep;
}

Vec phi_pullback(const SystemDefinition& sys, const PhasePoint& q) {
    int n = sys.n();
    std::vector<Jet> V, T;
    sys.jets(q, 1, 0, V, T);
    Vec phi = Vec::Zero(n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            phi[k] += V[k].coef(1 + i) * V[i].value() + V[k].coef(1 + n + i) * T[i].value();
    return phi;
}

std::vector<Jet> canonical_connection_jets(const SystemDefinition& sys, const PhasePoint& q, int K) {
    int n = sys.n();
    std::vector<Jet> V, T;
    sys.jets(q, K + 3, K + 2, V, T);
    // g_up(k,r) and dV^k/dx^i at order K+2
    std::vector<Jet> gup(n * n), dVx(n * n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) {
            dVx[k * n + i] = V[k].d(i);
            gup[k * n + i] = V[k].d(n + i);
        }
    std::vector<Jet> phi;
    for (int k = 0; k < n; ++k) {
        Jet s(2 * n, K + 2, 0.0);
        for (int i = 0; i < n; ++i) s += dVx[k * n + i] * V[i] + gup[k * n + i] * T[i];
        phi.push_back(s);
    }
    std::vector<Jet> gd = invert(gup, n);  // order K
    // dphi(k,b) at order K+1, d2phi(k,r,s) and d2V(a,r,s) at order K
    std::vector<Jet> dphi(n * n), d2phi(n * n * n), d2V(n * n * n);
    for (int k = 0; k < n; ++k)
        for (int b = 0; b < n; ++b) {
            dphi[k * n + b] = phi[k].d(n + b);
            for (int s = 0; s < n; ++s) {
                d2phi[(k * n + b) * n + s] = dphi[k * n + b].d(n + s);
                d2V[(k * n + b) * n + s] = gup[k * n + b].d(n + s);
            }
        }
    // h(k,a) = sum_b g_down(b,a) dphi(k,b)
    std::vector<Jet> hk(n * n);
    for (int k = 0; k < n; ++k)
        for (int a = 0; a < n; ++a) {
            Jet s(2 * n, K, 0.0);
            for (int b = 0; b < n; ++b) s += gd[b * n + a] * dphi[k * n + b];
            hk[k * n + a] = s;
        }
    std::vector<Jet> G(n * n * n);
    for (int k = 0; k < n; ++k) {
        // M(r,s) = d2phi(k,r,s) - sum_a d2V(a,r,s) h(k,a)
        std::vector<Jet> M(n * n);
        for (int r = 0; r < n; ++r)
            for (int s = 0; s < n; ++s) {
                Jet m = d2phi[(k * n + r) * n + s];
                for (int a = 0; a < n; ++a) m -= d2V[(a * n + r) * n + s] * hk[k * n + a];
                M[r * n + s] = m;
            }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Jet s(2 * n, K, 0.0);
                for (int r = 0; r < n; ++r) {
                    Jet row(2 * n, K, 0.0);
                    for (int c = 0; c < n; ++c) row += gd[c * n + j] * M[r * n + c];
                    s += gd[r * n + i] * row;
                }
                s *= -0.5;
                G[(k * n + i) * n + j] = s;
            }
    }
    return G;
}

Tensor3 canonical_connection(const SystemDefinition& sys, const PhasePoint& q) {
    int n = sys.n();
    auto G = canonical_connection_jets(sys, q, 0);
    Tensor3 t(n);
    for (int i = 0; i < n * n * n; ++i) t.a[i] = G[i].value();
    return t;
}

}  // namespace nsl
