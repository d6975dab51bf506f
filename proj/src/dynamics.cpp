#include "nsl/dynamics.hpp"

#include <cmath>

#include "nsl/error.hpp"

namespace nsl {

namespace {

Mat values_nm(const std::vector<Jet>& j, int n) {
    Mat m(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) m(a, b) = j[a * n + b].value();
    return m;
}

Mat pgrad(const std::vector<Jet>& f, int n) {
    Mat m(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) m(a, b) = f[a].coef(1 + n + b);
    return m;
}

}  // namespace

LocalGeometry local_geometry(const SystemDefinition& sys, const ConnectionField& conn, const PhasePoint& q,
                             bool with_u) {
    int n = sys.n();
    LocalGeometry g;
    g.n = n;
    g.q = q;
    std::vector<Jet> V, T;
    sys.jets(q, 2, 1, V, T);
    auto G = conn.jets(q, 1);
    auto vars = phase_variables(q, 1);

    KinematicFrame& f = g.frame;
    f.V.resize(n);
    f.g_up.resize(n, n);
    g.Theta.resize(n);
    for (int i = 0; i < n; ++i) {
        f.V[i] = V[i].value();
        g.Theta[i] = T[i].value();
        for (int r = 0; r < n; ++r) f.g_up(i, r) = V[i].coef(1 + n + r);
    }
    require_regular_metric(f.g_up);
    f.g_down = f.g_up.inverse();
    Eigen::Map<const Vec> p(q.p.data(), n);
    f.W = f.g_up.transpose() * p;
    f.Omega = p.dot(f.W);
    require_nondegenerate_omega(p, f.W);
    f.P = Mat::Identity(n, n) - f.W * p.transpose() / f.Omega;

    g.Gamma = Tensor3(n);
    for (int i = 0; i < n * n * n; ++i) g.Gamma.a[i] = G[i].value();
    g.curv = curvatures_from_jets(G, q);

    // W and Q as order-1 jets
    std::vector<Jet> Wj, Qj;
    for (int s = 0; s < n; ++s) {
        Jet w(2 * n, 1, 0.0);
        for (int r = 0; r < n; ++r) w += V[r].d(n + s) * vars[n + r];
        Wj.push_back(w);
    }
    for (int i = 0; i < n; ++i) {
        Jet s = T[i];
        for (int j = 0; j < n; ++j) {
            Jet vj = V[j].truncated(1);
            for (int k = 0; k < n; ++k) s -= G[(k * n + i) * n + j] * vars[n + k] * vj;
        }
        Qj.push_back(s);
    }
    g.Q.resize(n);
    for (int i = 0; i < n; ++i) g.Q[i] = Qj[i].value();

    auto nVj = covariant_derivative(V, 1, 0, G, q);  // order 1
    g.nV = values_nm(nVj, n);
    g.dVp = f.g_up;
    g.nW = values_nm(covariant_derivative(Wj, 1, 0, G, q), n);
    g.dWp = pgrad(Wj, n);
    g.nQ = values_nm(covariant_derivative(Qj, 0, 1, G, q), n);
    g.dQp = pgrad(Qj, n);
    if (with_u) {
        std::vector<Jet> Uj;
        for (int s = 0; s < n; ++s) {
            Jet u = Qj[s];
            for (int r = 0; r < n; ++r) u += nVj[r * n + s] * vars[n + r];
            Uj.push_back(u);
        }
        g.U.resize(n);
        for (int s = 0; s < n; ++s) g.U[s] = Uj[s].value();
        g.nU = values_nm(covariant_derivative(Uj, 0, 1, G, q), n);
        g.dUp = pgrad(Uj, n);
    }
    return g;
}

StateRate phase_rhs(const SystemDefinition& sys, const PhasePoint& q) {
    std::vector<Jet> V, T;
    sys.jets(q, 0, 0, V, T);
    StateRate r;
    int n = sys.n();
    r.dx.resize(n);
    r.dp.resize(n);
    for (int i = 0; i < n; ++i) {
        r.dx[i] = V[i].value();
        r.dp[i] = T[i].value();
    }
    return r;
}

StateRate variational_rhs(const SystemDefinition& sys, const ConnectionField& conn, const ExtendedState& s) {
    if (s.taus.empty() && s.xis.empty()) return phase_rhs(sys, s.q);
    if (s.taus.size() != s.xis.size()) throw std::invalid_argument("taus and xis differ in count");
    int n = sys.n();
    LocalGeometry g = local_geometry(sys, conn, s.q, false);
    const Vec& V = g.frame.V;
    const auto& G = g.Gamma;
    const auto& R = g.curv.R;
    const auto& D = g.curv.D;
    StateRate r;
    r.dx = V;
    r.dp = g.Theta;
    // tau' = -Gamma^i_jk V^j tau^k + nabla_k V^i tau^k + dV^i/dp_k xi_k
    Mat Mtt(n, n), Mtx = g.dVp;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            double v = g.nV(i, k);
            for (int j = 0; j < n; ++j) v -= G(i, j, k) * V[j];
            Mtt(i, k) = v;
        }
    // xi'_i = Gamma^k_ij V^j xi_k
    //         - sum_k (R^s_ijk p_s V^j - D^{sj}_ik p_s Q_j) tau^k - D^{sk}_ij p_s V^j xi_k
    //         + nabla_k Q_i tau^k + dQ_i/dp_k xi_k
    Mat Mxt(n, n), Mxx(n, n);
    const auto& p = s.q.p;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            double a = g.nQ(i, k), b = g.dQp(i, k);
            for (int j = 0; j < n; ++j) {
                b += G(k, i, j) * V[j];
                for (int sdx = 0; sdx < n; ++sdx) {
                    a -= R(sdx, i, j, k) * p[sdx] * V[j] - D(sdx, j, i, k) * p[sdx] * g.Q[j];
                    b -= D(sdx, k, i, j) * p[sdx] * V[j];
                }
            }
            Mxt(i, k) = a;
            Mxx(i, k) = b;
        }
    for (std::size_t a = 0; a < s.taus.size(); ++a) {
        r.dtau.push_back(Mtt * s.taus[a] + Mtx * s.xis[a]);
        r.dxi.push_back(Mxt * s.taus[a] + Mxx * s.xis[a]);
    }
    return r;
}

namespace {

ExtendedState advance(const ExtendedState& s, const StateRate& r, double h) {
    ExtendedState o = s;
    int n = s.q.n();
    for (int i = 0; i < n; ++i) {
        o.q.x[i] += h * r.dx[i];
        o.q.p[i] += h * r.dp[i];
    }
    for (std::size_t a = 0; a < s.taus.size(); ++a) {
        o.taus[a] += h * r.dtau[a];
        o.xis[a] += h * r.dxi[a];
    }
    o.t += h;
    return o;
}

bool finite(const ExtendedState& s) {
    for (double v : s.q.x)
        if (!std::isfinite(v)) return false;
    for (double v : s.q.p)
        if (!std::isfinite(v)) return false;
    for (const auto& v : s.taus)
        if (!v.allFinite()) return false;
    for (const auto& v : s.xis)
        if (!v.allFinite()) return false;
    return true;
}

}  // namespace

Trajectory integrate(const SystemDefinition& sys, const ConnectionField& conn, const ExtendedState& s0,
                     const IntegratorConfig& cfg) {
    if (!(cfg.step > 0.0) || !std::isfinite(cfg.t_end))
        throw Error(ErrorKind::Config, "integrator needs step > 0 and finite t_end");
    if (!finite(s0)) throw Error(ErrorKind::NonFiniteState, "initial state is not finite");
    long steps = static_cast<long>(std::ceil((cfg.t_end - s0.t) / cfg.step - 1e-9));
    Trajectory out;
    out.reserve(std::max(steps, 0L) + 1);
    out.push_back(s0);
    ExtendedState s = s0;
    auto f = [&](const ExtendedState& st) { return variational_rhs(sys, conn, st); };
    for (long k = 0; k < steps; ++k) {
        double h = std::min(cfg.step, cfg.t_end - s.t);
        if (k == steps - 1) h = cfg.t_end - s.t;
        StateRate k1 = f(s);
        StateRate k2 = f(advance(s, k1, h / 2));
        StateRate k3 = f(advance(s, k2, h / 2));
        StateRate k4 = f(advance(s, k3, h));
        ExtendedState nx = s;
        int n = s.q.n();
        for (int i = 0; i < n; ++i) {
            nx.q.x[i] += h / 6 * (k1.dx[i] + 2 * k2.dx[i] + 2 * k3.dx[i] + k4.dx[i]);
            nx.q.p[i] += h / 6 * (k1.dp[i] + 2 * k2.dp[i] + 2 * k3.dp[i] + k4.dp[i]);
        }
        for (std::size_t a = 0; a < s.taus.size(); ++a) {
            nx.taus[a] += h / 6 * (k1.dtau[a] + 2 * k2.dtau[a] + 2 * k3.dtau[a] + k4.dtau[a]);
            nx.xis[a] += h / 6 * (k1.dxi[a] + 2 * k2.dxi[a] + 2 * k3.dxi[a] + k4.dxi[a]);
        }
        nx.t = (k == steps - 1) ? cfg.t_end : s0.t + (k + 1) * cfg.step;
        if (!finite(nx))
            throw Error(ErrorKind::NonFiniteState, "state became non-finite at t = " + std::to_string(nx.t));
        s = std::move(nx);
        out.push_back(s);
    }
    return out;
}

std::vector<double> deviation(const ExtendedState& s) {
    std::vector<double> phi;
    Eigen::Map<const Vec> p(s.q.p.data(), s.q.n());
    for (const auto& t : s.taus) phi.push_back(t.dot(p));
    return phi;
}

double deviation_rate(const LocalGeometry& g, const Vec& tau, const Vec& xi) {
    return g.U.dot(tau) + g.frame.W.dot(xi);
}

WeakFieldBundle weak_fields(const LocalGeometry& g) {
    int n = g.n;
    const Vec& V = g.frame.V;
    const Vec& W = g.frame.W;
    const Vec& Q = g.Q;
    const Vec& U = g.U;
    const auto& R = g.curv.R;
    const auto& D = g.curv.D;
    Eigen::Map<const Vec> p(g.q.p.data(), n);
    WeakFieldBundle b;
    b.U = U;
    b.alpha = Vec::Zero(n);
    b.beta = Vec::Zero(n);
    for (int k = 0; k < n; ++k) {
        double a = 0.0, c = 0.0;
        for (int r = 0; r < n; ++r) {
            a += g.dVp(r, k) * U[r] + g.nW(k, r) * V[r] + g.dWp(k, r) * Q[r] + W[r] * g.dQp(r, k);
            c += g.nU(k, r) * V[r] + g.dUp(k, r) * Q[r] + g.nV(r, k) * U[r] + g.nQ(r, k) * W[r];
            for (int s = 0; s < n; ++s)
                for (int m = 0; m < n; ++m) {
                    a -= p[s] * D(s, k, r, m) * W[r] * V[m];
                    c -= R(s, r, m, k) * V[m] * W[r] * p[s];
                    c += D(s, m, r, k) * Q[m] * W[r] * p[s];
                }
        }
        b.alpha[k] = a;
        b.beta[k] = c;
    }
    double om = g.frame.Omega;
    b.eta = b.beta - U * (b.alpha.dot(p) / om);
    b.A = p.dot(b.alpha) / om;
    b.B = b.eta.dot(W) / om;
    return b;
}

WeakFieldBundle weak_fields(const SystemDefinition& sys, const ConnectionField& conn, const PhasePoint& q) {
    return weak_fields(local_geometry(sys, conn, q));
}

}  // namespace nsl
