#include "nsl/connection.hpp"

#include <cmath>
#include <random>

#include "nsl/error.hpp"

namespace nsl {

ConnectionField::ConnectionField(int n, JetField eval, std::string source)
    : n_(n), eval_(std::move(eval)), source_(std::move(source)) {}

ConnectionField ConnectionField::zero(int n) {
    return ConnectionField(
        n, [n](const PhasePoint&, int order) { return std::vector<Jet>(n * n * n, Jet(2 * n, order, 0.0)); },
        "zero");
}

ConnectionField ConnectionField::canonical(const SystemDefinition& sys) {
    return ConnectionField(
        sys.n(), [sys](const PhasePoint& q, int order) { return canonical_connection_jets(sys, q, order); },
        "canonical");
}

ConnectionField ConnectionField::from_expressions(int n, const std::map<std::array<int, 3>, Expression>& entries) {
    std::vector<Expression> slot(n * n * n);
    for (const auto& [key, e] : entries) {
        auto [k, i, j] = key;
        if (k < 0 || i < 0 || j < 0 || k >= n || i >= n || j >= n)
            throw Error(ErrorKind::Config, "Gamma index out of range");
        if (e.slots() != 2 * n) throw Error(ErrorKind::Config, "Gamma entry not over phase space");
        slot[(k * n + i) * n + j] = e;
    }
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                auto& a = slot[(k * n + i) * n + j];
                auto& b = slot[(k * n + j) * n + i];
                if (a && b && a.describe() != b.describe())
                    throw Error(ErrorKind::Config, "Gamma entries " + std::to_string(k + 1) + "," +
                                                       std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                                       " and its (j,i) twin disagree");
                if (!a) a = b;
                if (!b) b = a;
            }
    return ConnectionField(
        n,
        [n, slot](const PhasePoint& q, int order) {
            auto vars = phase_variables(q, order);
            std::vector<Jet> out;
            out.reserve(slot.size());
            for (const auto& e : slot)
                out.push_back(e ? e.eval(std::span<const Jet>(vars)) : Jet(2 * n, order, 0.0));
            return out;
        },
        "explicit");
}

Tensor3 ConnectionField::at(const PhasePoint& q) const {
    auto G = jets(q, 0);
    Tensor3 t(n_);
    for (std::size_t i = 0; i < G.size(); ++i) t.a[i] = G[i].value();
    return t;
}

// ---------------------------------------------------------------- gauge

GaugeTensor::GaugeTensor(int n, JetField eval) : n_(n), eval_(std::move(eval)) {}

GaugeTensor GaugeTensor::random(int n, std::uint64_t seed) {
    // monomials of degree <= 2 in the 2n phase variables
    std::mt19937_64 rng(seed);
    auto unit = [&] { return (static_cast<double>(rng() >> 11) * 0x1.0p-53) * 2.0 - 1.0; };
    int m = 2 * n;
    int nmono = 1 + m + m * (m + 1) / 2;
    std::vector<double> c(n * n * n * nmono, 0.0);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
                for (int t = 0; t < nmono; ++t) {
                    double v = unit();
                    c[((k * n + i) * n + j) * nmono + t] = v;
                    c[((k * n + j) * n + i) * nmono + t] = v;
                }
    return GaugeTensor(n, [n, m, nmono, c](const PhasePoint& q, int order) {
        auto vars = phase_variables(q, order);
        std::vector<Jet> mono{Jet(m, order, 1.0)};
        for (int a = 0; a < m; ++a) mono.push_back(vars[a]);
        for (int a = 0; a < m; ++a)
            for (int b = a; b < m; ++b) mono.push_back(vars[a] * vars[b]);
        std::vector<Jet> out;
        for (int e = 0; e < n * n * n; ++e) {
            Jet s(m, order, 0.0);
            for (int t = 0; t < nmono; ++t) s += c[e * nmono + t] * mono[t];
            out.push_back(s);
        }
        return out;
    });
}

GaugeTensor GaugeTensor::constant(const Tensor3& t) {
    int n = t.n;
    return GaugeTensor(n, [n, t](const PhasePoint&, int order) {
        std::vector<Jet> out;
        for (double v : t.a) out.push_back(Jet(2 * n, order, v));
        return out;
    });
}

std::vector<Jet> GaugeTensor::jets(const PhasePoint& q, int order) const {
    auto T = eval_(q, order);
    int n = n_;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (std::abs(T[(k * n + i) * n + j].value() - T[(k * n + j) * n + i].value()) > 1e-12)
                    throw Error(ErrorKind::AsymmetricGauge, "gauge tensor is not symmetric in its lower indices");
    return T;
}

ConnectionField add_gauge(const ConnectionField& conn, const GaugeTensor& T) {
    return ConnectionField(
        conn.n(),
        [conn, T](const PhasePoint& q, int order) {
            auto G = conn.jets(q, order);
            auto t = T.jets(q, order);
            for (std::size_t i = 0; i < G.size(); ++i) G[i] += t[i];
            return G;
        },
        conn.source() + "+gauge");
}

// ---------------------------------------------------------------- derivatives

std::vector<Jet> covariant_derivative(std::span<const Jet> field, int up, int down, std::span<const Jet> gamma,
                                      const PhasePoint& q) {
    int n = q.n();
    int rank = up + down;
    std::size_t count = 1;
    for (int r = 0; r < rank; ++r) count *= n;
    if (field.size() != count) throw std::invalid_argument("field size does not match its rank");
    int K = field[0].order() - 1;
    for (const auto& f : field) K = std::min(K, f.order() - 1);
    K = std::min(K, gamma[0].order());
    int m2 = 2 * n;
    auto G = [&](int k, int i, int j) { return gamma[(k * n + i) * n + j].truncated(K); };
    // Gl(m,b) = sum_c p_c Gamma^c_mb
    // p enters as a jet variable so that momentum derivatives of the result see it
    std::vector<Jet> pj;
    for (int c = 0; c < n; ++c) pj.push_back(Jet::variable(m2, K, n + c, q.p[c]));
    std::vector<Jet> Gl(n * n, Jet(m2, K, 0.0));
    for (int m = 0; m < n; ++m)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) Gl[m * n + b] += pj[c] * G(c, m, b);
    std::vector<Jet> out(count * n, Jet(m2, K, 0.0));
    std::vector<int> idx(rank);
    for (std::size_t e = 0; e < count; ++e) {
        std::size_t r = e;
        for (int a = rank - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(r % n);
            r /= n;
        }
        for (int m = 0; m < n; ++m) {
            Jet acc = field[e].d(m).truncated(K);
            for (int b = 0; b < n; ++b) acc += Gl[m * n + b] * field[e].d(n + b);
            // connection terms, one per index
            std::size_t stride = count;
            for (int a = 0; a < rank; ++a) {
                stride /= n;
                int own = idx[a];
                for (int s = 0; s < n; ++s) {
                    std::size_t other = e + (static_cast<long>(s) - own) * static_cast<long>(stride);
                    if (a < up)
                        acc += G(own, m, s) * field[other].truncated(K);
                    else
                        acc -= G(s, m, own) * field[other].truncated(K);
                }
            }
            out[e * n + m] = acc;
        }
    }
    return out;
}

std::vector<Jet> momentum_gradient(std::span<const Jet> field, int n) {
    std::vector<Jet> out;
    out.reserve(field.size() * n);
    for (const auto& f : field)
        for (int m = 0; m < n; ++m) out.push_back(f.d(n + m));
    return out;
}

CurvaturePair curvatures_from_jets(std::span<const Jet> gamma, const PhasePoint& q) {
    int n = q.n();
    Tensor3 G(n);
    Tensor4 Gx(n), Gp(n);  // (k,i,j,m): d/dx^m, d/dp_m
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const Jet& g = gamma[(k * n + i) * n + j];
                G(k, i, j) = g.value();
                for (int m = 0; m < n; ++m) {
                    Gx(k, i, j, m) = g.coef(1 + m);
                    Gp(k, i, j, m) = g.coef(1 + n + m);
                }
            }
    Mat Gl = Mat::Zero(n, n);
    for (int m = 0; m < n; ++m)
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < n; ++a) Gl(m, i) += q.p[a] * G(a, m, i);
    CurvaturePair c{Tensor4(n), Tensor4(n)};
    for (int k = 0; k < n; ++k)
        for (int r = 0; r < n; ++r)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double v = Gx(k, j, r, i) - Gx(k, i, r, j);
                    for (int m = 0; m < n; ++m) {
                        v += G(k, i, m) * G(m, j, r) - G(k, j, m) * G(m, i, r);
                        v += Gl(m, i) * Gp(k, j, r, m) - Gl(m, j) * Gp(k, i, r, m);
                    }
                    c.R(k, r, i, j) = v;
                    c.D(k, r, i, j) = -Gp(k, i, j, r);
                }
    return c;
}

CurvaturePair curvatures(const ConnectionField& conn, const PhasePoint& q) {
    auto G = conn.jets(q, 1);
    return curvatures_from_jets(G, q);
}

JetField force_covector_field(const SystemDefinition& sys, const ConnectionField& conn) {
    return [sys, conn](const PhasePoint& q, int order) {
        int n = sys.n();
        std::vector<Jet> V, T;
        sys.jets(q, order, order, V, T);
        auto G = conn.jets(q, order);
        auto vars = phase_variables(q, order);
        std::vector<Jet> Q;
        for (int i = 0; i < n; ++i) {
            Jet s = T[i];
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) s -= G[(k * n + i) * n + j] * vars[n + k] * V[j];
            Q.push_back(s);
        }
        return Q;
    };
}

Vec force_covector(const SystemDefinition& sys, const ConnectionField& conn, const PhasePoint& q) {
    auto Q = force_covector_field(sys, conn)(q, 0);
    Vec out(sys.n());
    for (int i = 0; i < sys.n(); ++i) out[i] = Q[i].value();
    return out;
}

GaugedPair gauge_transform(const SystemDefinition& sys, const ConnectionField& conn, const JetField& Q,
                           const GaugeTensor& T) {
    JetField Qn = [sys, Q, T](const PhasePoint& q, int order) {
        int n = sys.n();
        std::vector<Jet> V, Th;
        sys.jets(q, order, 0, V, Th);
        auto t = T.jets(q, order);
        auto vars = phase_variables(q, order);
        auto out = Q(q, order);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int s = 0; s < n; ++s) out[i] -= t[(k * n + i) * n + s] * vars[n + k] * V[s];
        return out;
    };
    return {add_gauge(conn, T), Qn};
}

}  // namespace nsl
