#include "nsl/hypersurface.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "nsl/error.hpp"
#include "nsl/util.hpp"

namespace nsl {

Hypersurface make_surface(int n, const std::vector<std::string>& embedding,
                          std::vector<std::pair<double, double>> domain, std::vector<int> grid) {
    Hypersurface s;
    s.n = n;
    int m = n - 1;
    if (static_cast<int>(embedding.size()) != n)
        throw Error(ErrorKind::Config, "embedding needs " + std::to_string(n) + " components");
    if (static_cast<int>(domain.size()) != m || static_cast<int>(grid.size()) != m)
        throw Error(ErrorKind::Config, "domain and grid need one entry per parameter");
    for (const auto& e : embedding) s.embedding.push_back(parse_expression(e, Scope::params(m)));
    for (const auto& [lo, hi] : domain)
        if (!(hi >= lo)) throw Error(ErrorKind::Config, "domain bounds out of order");
    for (int c : grid)
        if (c < 1) throw Error(ErrorKind::Config, "grid counts must be positive");
    s.domain = std::move(domain);
    s.grid = std::move(grid);
    return s;
}

namespace {

Jet det_jets(const std::vector<Jet>& a, int m) {
    if (m == 1) return a[0];
    if (m == 2) return a[0] * a[3] - a[1] * a[2];
    Jet s = Jet(a[0].nvars(), a[0].order(), 0.0);
    for (int c = 0; c < m; ++c) {
        std::vector<Jet> minor;
        for (int r = 1; r < m; ++r)
            for (int cc = 0; cc < m; ++cc)
                if (cc != c) minor.push_back(a[r * m + cc]);
        Jet t = a[c] * det_jets(minor, m - 1);
        if (c % 2) s -= t;
        else s += t;
    }
    return s;
}

struct Embedded {
    Vec x, normal;
    Mat tau;  // n x m
    Mat dny;  // m x n, d n_s / d y^i
};

Embedded embed(const Hypersurface& surf, const Vec& y) {
    int n = surf.n, m = surf.params();
    if (y.size() != m) throw Error(ErrorKind::Config, "parameter vector has wrong size");
    std::vector<Jet> yv;
    for (int i = 0; i < m; ++i) yv.push_back(Jet::variable(m, 2, i, y[i]));
    std::vector<Jet> X;
    for (const auto& e : surf.embedding) X.push_back(e.eval(std::span<const Jet>(yv)));
    Embedded E;
    E.x.resize(n);
    E.tau.resize(n, m);
    std::vector<Jet> tj(n * m);  // tau^s_i as order-1 jets
    for (int s = 0; s < n; ++s) {
        E.x[s] = X[s].value();
        for (int i = 0; i < m; ++i) {
            tj[s * m + i] = X[s].d(i);
            E.tau(s, i) = tj[s * m + i].value();
        }
    }
    // n_s = det[e_s, tau_1..tau_m] = (-1)^s det(tau without row s)
    std::vector<Jet> nj;
    for (int s = 0; s < n; ++s) {
        std::vector<Jet> minor;
        for (int r = 0; r < n; ++r)
            if (r != s)
                for (int i = 0; i < m; ++i) minor.push_back(tj[r * m + i]);
        Jet d = det_jets(minor, m);
        nj.push_back(s % 2 ? -d : d);
    }
    Jet norm2(m, 1, 0.0);
    for (const auto& c : nj) norm2 += c * c;
    if (!(norm2.value() > 1e-24)) throw Error(ErrorKind::RankDeficientTangents, "tangent vectors are dependent");
    Jet inv = reciprocal(jet_sqrt(norm2));
    E.normal.resize(n);
    E.dny.resize(m, n);
    for (int s = 0; s < n; ++s) {
        Jet c = nj[s] * inv;
        E.normal[s] = c.value();
        for (int i = 0; i < m; ++i) E.dny(i, s) = c.coef(1 + i);
    }
    return E;
}

// dn(i,s) = d n_s/d y^i - sum Gamma^k_sr n_k tau^r_i
Mat covariant_dn(const Embedded& E, const Tensor3& G) {
    int n = static_cast<int>(E.x.size()), m = static_cast<int>(E.tau.cols());
    Mat dn = E.dny;
    for (int i = 0; i < m; ++i)
        for (int s = 0; s < n; ++s)
            for (int k = 0; k < n; ++k)
                for (int r = 0; r < n; ++r) dn(i, s) -= G(k, s, r) * E.normal[k] * E.tau(r, i);
    return dn;
}

PhasePoint lift(const Embedded& E, double nu) {
    PhasePoint q;
    for (int s = 0; s < E.x.size(); ++s) {
        q.x.push_back(E.x[s]);
        q.p.push_back(nu * E.normal[s]);
    }
    return q;
}

void check_nu(double nu) {
    if (!(std::abs(nu) >= 1e-10)) throw Error(ErrorKind::NuVanished, "|nu| < 1e-10");
}

// W, Omega, U at q using only zeroth-order connection data
struct LightFields {
    Vec W, U;
    double Omega;
    Tensor3 G;
};

LightFields light_fields(const SystemDefinition& sys, const ConnectionField& conn, const PhasePoint& q) {
    int n = sys.n();
    std::vector<Jet> V, T;
    sys.jets(q, 1, 0, V, T);
    LightFields f;
    f.G = conn.at(q);
    const auto& G = f.G;
    Mat gup(n, n), Vx(n, n);
    Vec v(n);
    for (int i = 0; i < n; ++i) {
        v[i] = V[i].value();
        for (int r = 0; r < n; ++r) {
            gup(i, r) = V[i].coef(1 + n + r);
            Vx(i, r) = V[i].coef(1 + r);
        }
    }
    Eigen::Map<const Vec> p(q.p.data(), n);
    f.W = gup.transpose() * p;
    f.Omega = p.dot(f.W);
    require_nondegenerate_omega(p, f.W);
    Mat Gl = Mat::Zero(n, n);
    for (int mm = 0; mm < n; ++mm)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) Gl(mm, b) += p[c] * G(c, mm, b);
    f.U = Vec::Zero(n);
    for (int s = 0; s < n; ++s) {
        double u = T[s].value();
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) u -= G(k, s, j) * p[k] * v[j];
        for (int r = 0; r < n; ++r) {
            double nv = Vx(r, s);
            for (int b = 0; b < n; ++b) nv += Gl(s, b) * gup(r, b);
            for (int a = 0; a < n; ++a) nv += G(r, s, a) * v[a];
            u += nv * p[r];
        }
        f.U[s] = u;
    }
    return f;
}

}  // namespace

SurfaceFrame surface_frame(const SystemDefinition& sys, const ConnectionField& conn, const Hypersurface& surf,
                           const Vec& y, double nu) {
    check_nu(nu);
    Embedded E = embed(surf, y);
    SurfaceFrame f;
    f.y = y;
    f.x = E.x;
    f.taus = E.tau;
    f.normal = E.normal;
    f.nu = nu;
    f.q = lift(E, nu);
    KinematicFrame k = frame_at(sys, f.q);
    f.dn = covariant_dn(E, conn.at(f.q));
    // theta_ri = -sum_q P^q_r dn_iq,  b_ij = sum_r theta_rj tau^r_i
    f.b = -(E.tau.transpose() * k.P.transpose() * f.dn.transpose());
    return f;
}

Vec pfaff_rhs(const SystemDefinition& sys, const ConnectionField& conn, const Hypersurface& surf, const Vec& y,
              double nu) {
    check_nu(nu);
    Embedded E = embed(surf, y);
    PhasePoint q = lift(E, nu);
    LightFields f = light_fields(sys, conn, q);
    Mat dn = covariant_dn(E, f.G);
    return -(nu * nu / f.Omega) * (dn * f.W) - (nu / f.Omega) * (E.tau.transpose() * f.U);
}

std::size_t NuGrid::index(const std::vector<int>& multi) const {
    std::size_t k = 0;
    for (std::size_t a = 0; a < counts.size(); ++a) k = k * counts[a] + multi[a];
    return k;
}

std::vector<Vec> grid_nodes(const Hypersurface& surf, std::vector<int>& counts) {
    int m = surf.params();
    if (counts.empty()) counts = surf.grid;
    if (static_cast<int>(counts.size()) != m) throw Error(ErrorKind::GridMismatch, "grid rank mismatch");
    std::size_t total = 1;
    for (int c : counts) total *= c;
    std::vector<Vec> nodes(total, Vec(m));
    for (std::size_t k = 0; k < total; ++k) {
        std::size_t r = k;
        for (int a = m - 1; a >= 0; --a) {
            int i = static_cast<int>(r % counts[a]);
            r /= counts[a];
            auto [lo, hi] = surf.domain[a];
            nodes[k][a] = counts[a] == 1 ? lo : lo + (hi - lo) * i / (counts[a] - 1);
        }
    }
    return nodes;
}

namespace {

double rk4_axis(const SystemDefinition& sys, const ConnectionField& conn, const Hypersurface& surf, Vec y,
                double nu, int axis, double h) {
    auto f = [&](const Vec& yy, double v) {
        check_nu(v);
        return pfaff_rhs(sys, conn, surf, yy, v)[axis];
    };
    Vec ym = y, ye = y;
    ym[axis] += h / 2;
    ye[axis] += h;
    double k1 = f(y, nu);
    double k2 = f(ym, nu + h / 2 * k1);
    double k3 = f(ym, nu + h / 2 * k2);
    double k4 = f(ye, nu + h * k3);
    double out = nu + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    check_nu(out);
    return out;
}

std::vector<int> unflatten(std::size_t k, const std::vector<int>& counts) {
    std::vector<int> idx(counts.size());
    for (int a = static_cast<int>(counts.size()) - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(k % counts[a]);
        k /= counts[a];
    }
    return idx;
}

}  // namespace

NuGrid solve_nu(const SystemDefinition& sys, const ConnectionField& conn, const Hypersurface& surf, double nu0,
                std::vector<int> start) {
    check_nu(nu0);
    NuGrid g;
    g.nodes = grid_nodes(surf, g.counts);
    int m = surf.params();
    if (start.empty()) start.assign(m, 0);
    std::size_t total = g.nodes.size();
    g.nu.assign(total, 0.0);
    // order nodes by path length from the start so predecessors come first
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    auto dist = [&](std::size_t k) {
        auto idx = unflatten(k, g.counts);
        int d = 0;
        for (int a = 0; a < m; ++a) d += std::abs(idx[a] - start[a]);
        return d;
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist(a) < dist(b); });
    for (std::size_t k : order) {
        auto idx = unflatten(k, g.counts);
        // path: axis 0 first, then axis 1, ...; the last move is on the highest differing axis
        int axis = -1;
        for (int a = m - 1; a >= 0 && axis < 0; --a)
            if (idx[a] != start[a]) axis = a;
        if (axis < 0) {
            g.nu[k] = nu0;
            continue;
        }
        auto prev = idx;
        prev[axis] += idx[axis] > start[axis] ? -1 : 1;
        std::size_t pk = g.index(prev);
        double h = g.nodes[k][axis] - g.nodes[pk][axis];
        g.nu[k] = rk4_axis(sys, conn, surf, g.nodes[pk], g.nu[pk], axis, h);
    }
    // two-route mismatch per cell and axis pair
    double worst = 0.0;
    for (std::size_t k = 0; k < total; ++k) {
        auto idx = unflatten(k, g.counts);
        for (int a = 0; a < m; ++a)
            for (int b = a + 1; b < m; ++b) {
                if (idx[a] + 1 >= g.counts[a] || idx[b] + 1 >= g.counts[b]) continue;
                auto ia = idx, ib = idx;
                ia[a] += 1;
                ib[b] += 1;
                const Vec& y0 = g.nodes[k];
                double ha = g.nodes[g.index(ia)][a] - y0[a];
                double hb = g.nodes[g.index(ib)][b] - y0[b];
                double va = rk4_axis(sys, conn, surf, y0, g.nu[k], a, ha);
                double vab = rk4_axis(sys, conn, surf, g.nodes[g.index(ia)], va, b, hb);
                double vb = rk4_axis(sys, conn, surf, y0, g.nu[k], b, hb);
                double vba = rk4_axis(sys, conn, surf, g.nodes[g.index(ib)], vb, a, ha);
                worst = std::max(worst, std::abs(vab - vba));
            }
    }
    g.path_residual = worst;
    return g;
}

Mat compatibility_residual(const SystemDefinition& sys, const ConnectionField& conn, const Hypersurface& surf,
                           const Vec& y, double nu) {
    check_nu(nu);
    Embedded E = embed(surf, y);
    PhasePoint q = lift(E, nu);
    LocalGeometry g = local_geometry(sys, conn, q);
    ABCTensors t = abc_tensors(g);
    int m = surf.params();
    double om = g.frame.Omega;
    Mat dn = covariant_dn(E, g.Gamma);
    Mat PD = dn * g.frame.P;  // PD(i,r) = sum_q P^q_r dn_iq
    Mat SA = t.A - t.A.transpose();
    Mat SC = t.C - t.C.transpose();
    Mat BT = PD * t.B * E.tau;
    Mat full = (nu * nu * nu / om) * (PD * SA * PD.transpose()) + (nu * nu / om) * (BT - BT.transpose()) +
               (nu / om) * (E.tau.transpose() * SC * E.tau);
    Mat out = Mat::Zero(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            out(i, j) = full(i, j);
            out(j, i) = -full(i, j);
        }
    return out;
}

ShiftRun simulate_shift(const SystemDefinition& sys, const ConnectionField& conn, const Hypersurface& surf,
                        const NuSource& src, const IntegratorConfig& cfg, int threads) {
    ShiftRun run;
    run.n = surf.n;
    std::vector<int> counts = src.constant ? std::vector<int>{} : src.grid.counts;
    run.ys = grid_nodes(surf, counts);
    if (!src.constant) {
        if (src.grid.nodes.size() != run.ys.size()) throw Error(ErrorKind::GridMismatch, "nu grid size mismatch");
        for (std::size_t k = 0; k < run.ys.size(); ++k)
            if ((src.grid.nodes[k] - run.ys[k]).cwiseAbs().maxCoeff() > 1e-12)
                throw Error(ErrorKind::GridMismatch, "nu grid nodes differ from the surface grid");
    }
    std::size_t total = run.ys.size();
    run.nus.resize(total);
    run.trajectories.resize(total);
    int m = surf.params();
    parallel_for(static_cast<int>(total), threads, [&](int k) {
        double nu = src.constant ? src.value : src.grid.nu[k];
        run.nus[k] = nu;
        check_nu(nu);
        Embedded E = embed(surf, run.ys[k]);
        ExtendedState s;
        s.q = lift(E, nu);
        Mat dn = covariant_dn(E, conn.at(s.q));
        Vec dnu = src.constant ? Vec::Zero(m) : pfaff_rhs(sys, conn, surf, run.ys[k], nu);
        for (int i = 0; i < m; ++i) {
            s.taus.push_back(E.tau.col(i));
            // xi_i = nabla_{tau_i} (nu n) = (d nu/dy^i) n + nu dn_i
            s.xis.push_back(dnu[i] * E.normal + nu * dn.row(i).transpose());
        }
        run.trajectories[k] = integrate(sys, conn, s, cfg);
    });
    return run;
}

OrthogonalityReport verify_orthogonality(const ShiftRun& run, double tol) {
    OrthogonalityReport rep;
    if (run.trajectories.empty()) return rep;
    std::size_t steps = run.trajectories[0].size();
    for (std::size_t t = 0; t < steps; ++t) {
        double worst = 0.0;
        for (const auto& tr : run.trajectories)
            for (double phi : deviation(tr[t])) worst = std::max(worst, std::abs(phi));
        rep.times.push_back(run.trajectories[0][t].t);
        rep.max_phi.push_back(worst);
        rep.max_phi_overall = std::max(rep.max_phi_overall, worst);
        if (!(worst <= tol) && rep.normal) {
            rep.normal = false;
            rep.first_violation = run.trajectories[0][t].t;
        }
    }
    return rep;
}

std::string trajectory_csv(const Trajectory& tr) {
    std::ostringstream os;
    if (tr.empty()) return "";
    int n = tr[0].q.n();
    std::size_t m = tr[0].taus.size();
    os << 't';
    for (int i = 1; i <= n; ++i) os << ",x" << i;
    for (int i = 1; i <= n; ++i) os << ",p" << i;
    for (std::size_t a = 1; a <= m; ++a)
        for (int i = 1; i <= n; ++i) os << ",tau" << a << '_' << i;
    for (std::size_t a = 1; a <= m; ++a)
        for (int i = 1; i <= n; ++i) os << ",xi" << a << '_' << i;
    for (std::size_t a = 1; a <= m; ++a) os << ",phi_" << a;
    os << '\n';
    for (const auto& s : tr) {
        os << fmt17(s.t);
        for (double v : s.q.x) os << ',' << fmt17(v);
        for (double v : s.q.p) os << ',' << fmt17(v);
        for (const auto& t : s.taus)
            for (int i = 0; i < n; ++i) os << ',' << fmt17(t[i]);
        for (const auto& x : s.xis)
            for (int i = 0; i < n; ++i) os << ',' << fmt17(x[i]);
        for (double phi : deviation(s)) os << ',' << fmt17(phi);
        os << '\n';
    }
    return os.str();
}

std::string shift_csv(const ShiftRun& run) {
    std::ostringstream os;
    int n = run.n, m = n - 1;
    for (int i = 1; i <= m; ++i) os << 'y' << i << ',';
    os << 't';
    for (int i = 1; i <= n; ++i) os << ",x" << i;
    for (int i = 1; i <= n; ++i) os << ",p" << i;
    for (int i = 1; i <= m; ++i) os << ",phi_" << i;
    os << '\n';
    for (std::size_t k = 0; k < run.trajectories.size(); ++k)
        for (const auto& s : run.trajectories[k]) {
            for (int i = 0; i < m; ++i) os << fmt17(run.ys[k][i]) << ',';
            os << fmt17(s.t);
            for (double v : s.q.x) os << ',' << fmt17(v);
            for (double v : s.q.p) os << ',' << fmt17(v);
            for (double phi : deviation(s)) os << ',' << fmt17(phi);
            os << '\n';
        }
    return os.str();
}

}  // namespace nsl
