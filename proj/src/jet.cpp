#include "nsl/jet.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "nsl/error.hpp"

namespace nsl {

namespace {

constexpr int kMaxVars = 16;
constexpr int kMaxOrder = 7;

std::uint64_t key_of(const int* e, int n) {
    std::uint64_t k = 0;
    for (int v = n - 1; v >= 0; --v) k = (k << 4) | static_cast<std::uint64_t>(e[v]);
    return k;
}

// exponent vectors of total degree d in lexicographic order (first var largest first)
void enumerate(int n, int d, std::vector<int>& cur, int var, std::vector<std::vector<int>>& out) {
    if (var == n - 1) {
        cur[var] = d;
        out.push_back(cur);
        return;
    }
    for (int e = d; e >= 0; --e) {
        cur[var] = e;
        enumerate(n, d - e, cur, var + 1, out);
    }
}

struct LayoutIndex {
    std::unordered_map<std::uint64_t, long> map;
};

std::map<const Layout*, LayoutIndex>& index_store() {
    static std::map<const Layout*, LayoutIndex> s;
    return s;
}

}  // namespace

Layout::Layout(int nvars, int order) : nvars_(nvars), order_(order) {
    std::vector<std::vector<int>> all;
    size_.assign(order + 1, 0);
    std::vector<int> cur(nvars, 0);
    for (int d = 0; d <= order; ++d) {
        enumerate(nvars, d, cur, 0, all);
        size_[d] = all.size();
    }
    std::unordered_map<std::uint64_t, long> idx;
    exps_.resize(all.size() * nvars);
    deg_.resize(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        int d = 0;
        for (int v = 0; v < nvars; ++v) {
            exps_[i * nvars + v] = static_cast<std::uint8_t>(all[i][v]);
            d += all[i][v];
        }
        deg_[i] = static_cast<std::uint8_t>(d);
        idx[key_of(all[i].data(), nvars)] = static_cast<long>(i);
    }
    mul_start_.assign(all.size() + 1, 0);
    std::vector<int> e(nvars);
    for (std::size_t i = 0; i < all.size(); ++i) {
        mul_start_[i] = mul_.size();
        for (std::size_t j = 0; j < size_[order - deg_[i]]; ++j) {
            for (int v = 0; v < nvars; ++v) e[v] = all[i][v] + all[j][v];
            mul_.push_back({static_cast<std::uint32_t>(j),
                            static_cast<std::uint32_t>(idx.at(key_of(e.data(), nvars)))});
        }
    }
    mul_start_[all.size()] = mul_.size();
    if (order > 0) {
        std::size_t nt = size_[order - 1];
        dmap_.resize(nt * nvars);
        for (int var = 0; var < nvars; ++var) {
            for (std::size_t t = 0; t < nt; ++t) {
                for (int v = 0; v < nvars; ++v) e[v] = all[t][v];
                e[var] += 1;
                dmap_[var * nt + t] = {static_cast<std::uint32_t>(idx.at(key_of(e.data(), nvars))),
                                       static_cast<double>(e[var])};
            }
        }
    }
    index_store()[this].map = std::move(idx);
}

const Layout& Layout::get(int nvars, int order) {
    if (nvars < 1 || nvars > kMaxVars || order < 0 || order > kMaxOrder)
        throw std::invalid_argument("jet layout out of range");
    thread_local const Layout* local[kMaxVars + 1][kMaxOrder + 1] = {};
    if (const Layout* L = local[nvars][order]) return *L;
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::unique_ptr<Layout>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{nvars, order}];
    if (!slot) slot.reset(new Layout(nvars, order));
    local[nvars][order] = slot.get();
    return *slot;
}

long Layout::index_of(std::span<const int> exps) const {
    int d = 0;
    for (int e : exps) {
        if (e < 0) return -1;
        d += e;
    }
    if (d > order_ || static_cast<int>(exps.size()) != nvars_) return -1;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    const auto& m = index_store().at(this).map;
    auto it = m.find(key_of(exps.data(), nvars_));
    return it == m.end() ? -1 : it->second;
}

// ---------------------------------------------------------------- Jet

Jet::Jet(int nvars, int order, double value) : Jet(&Layout::get(nvars, order)) { c_[0] = value; }

Jet Jet::variable(int nvars, int order, int var, double value) {
    Jet j(nvars, order, value);
    if (order > 0) j.c_[1 + var] = 1.0;  // degree-1 block is e_0, e_1, ... in order
    return j;
}

bool Jet::is_constant() const {
    for (std::size_t i = 1; i < c_.size(); ++i)
        if (c_[i] != 0.0) return false;
    return true;
}

double Jet::partial(std::initializer_list<int> vars) const {
    return partial(std::span<const int>(vars.begin(), vars.size()));
}

double Jet::partial(std::span<const int> vars) const {
    std::vector<int> e(nvars(), 0);
    for (int v : vars) e.at(v) += 1;
    long i = L_->index_of(e);
    if (i < 0) throw std::invalid_argument("partial above jet order");
    double f = 1.0;
    for (int k : e)
        for (int t = 2; t <= k; ++t) f *= t;
    return f * c_[i];
}

Jet Jet::d(int var) const {
    if (order() == 0) throw std::invalid_argument("derivative of order-0 jet");
    Jet r(&Layout::get(nvars(), order() - 1));
    auto m = L_->derivative_map(var);
    for (std::size_t t = 0; t < m.size(); ++t) r.c_[t] = m[t].factor * c_[m[t].src];
    return r;
}

Jet Jet::truncated(int k) const {
    if (k >= order()) return *this;
    Jet r(&Layout::get(nvars(), k));
    std::copy(c_.begin(), c_.begin() + r.c_.size(), r.c_.begin());
    return r;
}

Jet& Jet::operator+=(const Jet& o) {
    if (o.order() < order()) *this = truncated(o.order());
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
}

Jet& Jet::operator-=(const Jet& o) {
    if (o.order() < order()) *this = truncated(o.order());
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
}

Jet& Jet::operator*=(double s) {
    for (double& c : c_) c *= s;
    return *this;
}

Jet operator+(const Jet& a, const Jet& b) {
    if (a.order() <= b.order()) {
        Jet r = a;
        return r += b;
    }
    Jet r = b;
    return r += a;
}

Jet operator-(const Jet& a, const Jet& b) {
    Jet r = a.truncated(std::min(a.order(), b.order()));
    return r -= b;
}

Jet operator-(const Jet& a) {
    Jet r = a;
    return r *= -1.0;
}

Jet product(const Jet& a, const Jet& b, int order) {
    Jet r(&Layout::get(a.nvars(), order));
    const Layout& L = *r.L_;
    const double* bc = b.c_.data();
    double* rc = r.c_.data();
    for (std::size_t i = 0; i < L.size(); ++i) {
        double ai = a.c_[i];
        if (ai == 0.0) continue;
        for (const auto& t : L.product_row(i)) rc[t.k] += ai * bc[t.j];
    }
    return r;
}

Jet operator*(const Jet& a, const Jet& b) { return product(a, b, std::min(a.order(), b.order())); }

Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

Jet compose_univariate(const Jet& a, std::span<const double> derivs) {
    int K = a.order();
    Jet h = a;
    h.c_[0] = 0.0;
    double fact = 1.0;
    for (int k = 2; k <= K; ++k) fact *= k;
    Jet r(a.nvars(), K, derivs[K] / fact);
    for (int k = K - 1; k >= 0; --k) {
        fact /= (k + 1);
        r = product(r, h, K);
        r.c_[0] += derivs[k] / fact;
    }
    return r;
}

namespace {

Jet series(const Jet& a, auto&& deriv_at) {
    std::vector<double> d(a.order() + 1);
    for (int k = 0; k <= a.order(); ++k) d[k] = deriv_at(k);
    return compose_univariate(a, d);
}

void domain(const char* msg) { throw Error(ErrorKind::Domain, msg); }

}  // namespace

Jet reciprocal(const Jet& a) {
    double b = a.value();
    if (b == 0.0) domain("division by zero");
    double inv = 1.0 / b;
    return series(a, [&, f = 1.0, p = inv](int k) mutable {
        if (k > 0) {
            f *= -k;
            p *= inv;
        }
        return f * p;
    });
}

Jet jet_pow(const Jet& a, double c) {
    double a0 = a.value();
    if (c == std::floor(c) && c >= 0 && c <= 64) {
        int e = static_cast<int>(c);
        Jet r(a.nvars(), a.order(), 1.0), base = a;
        while (e) {
            if (e & 1) r = r * base;
            e >>= 1;
            if (e) base = base * base;
        }
        return r;
    }
    if (c == std::floor(c) && c < 0 && c >= -64) {
        if (a0 == 0.0) domain("zero raised to a negative power");
        return reciprocal(jet_pow(a, -c));
    }
    if (a0 < 0.0) domain("negative base with non-integer exponent");
    if (a0 == 0.0) {
        if (a.order() == 0 && c > 0) return Jet(a.nvars(), 0, 0.0);
        domain("non-integer power at zero is not differentiable");
    }
    return series(a, [&, f = 1.0](int k) mutable {
        if (k > 0) f *= (c - (k - 1));
        return f * std::pow(a0, c - k);
    });
}

Jet jet_sqrt(const Jet& a) {
    double a0 = a.value();
    if (a0 < 0.0) domain("sqrt of negative argument");
    if (a0 == 0.0) {
        if (a.order() == 0) return Jet(a.nvars(), 0, 0.0);
        domain("sqrt at zero is not differentiable");
    }
    return jet_pow(a, 0.5);
}

Jet jet_exp(const Jet& a) {
    double e = std::exp(a.value());
    return series(a, [&](int) { return e; });
}

Jet jet_log(const Jet& a) {
    double a0 = a.value();
    if (a0 <= 0.0) domain("log of non-positive argument");
    return series(a, [&, f = 1.0](int k) mutable {
        if (k == 0) return std::log(a0);
        if (k > 1) f *= -(k - 1);
        return f / std::pow(a0, k);
    });
}

Jet jet_sin(const Jet& a) {
    double s = std::sin(a.value()), c = std::cos(a.value());
    const double cyc[4] = {s, c, -s, -c};
    return series(a, [&](int k) { return cyc[k % 4]; });
}

Jet jet_cos(const Jet& a) {
    double s = std::sin(a.value()), c = std::cos(a.value());
    const double cyc[4] = {c, -s, -c, s};
    return series(a, [&](int k) { return cyc[k % 4]; });
}

Jet jet_tan(const Jet& a) {
    if (std::cos(a.value()) == 0.0) domain("tan at a pole");
    return jet_sin(a) / jet_cos(a);
}

Jet jet_abs(const Jet& a) {
    if (a.value() > 0.0) return a;
    if (a.value() < 0.0) return -a;
    if (a.order() == 0) return a;
    domain("abs at zero is not differentiable");
    return a;
}

Jet jet_atan2(const Jet& a, const Jet& b) {
    double a0 = a.value(), b0 = b.value();
    if (a0 == 0.0 && b0 == 0.0) domain("atan2(0,0)");
    // atan2(a,b) = atan2(a0,b0) + atan(u) with u vanishing at the base point
    Jet u = (a * b0 - b * a0) / (a * a0 + b * b0);
    int K = u.order();
    std::vector<double> d(K + 1, 0.0);
    // derivatives of atan at 0: odd k -> (-1)^((k-1)/2) (k-1)!
    double f = 1.0;
    for (int k = 1; k <= K; ++k) {
        if (k > 1) f *= (k - 1);
        if (k % 2 == 1) d[k] = ((k - 1) / 2 % 2 == 0 ? 1.0 : -1.0) * f;
    }
    Jet r = compose_univariate(u, d);
    r += std::atan2(a0, b0);
    return r;
}

Jet jet_pow(const Jet& a, const Jet& b) {
    if (b.is_constant()) return jet_pow(a, b.value());
    if (a.value() <= 0.0) domain("non-positive base with variable exponent");
    return jet_exp(b * jet_log(a));
}

Jet compose(const Jet& poly, std::span<const Jet> inputs) {
    const Layout& P = poly.layout();
    if (static_cast<int>(inputs.size()) != P.nvars())
        throw std::invalid_argument("compose: input count mismatch");
    int K = poly.order();
    int m = inputs[0].nvars();
    for (const auto& u : inputs) K = std::min(K, u.order());
    // powers[j][e] = (u_j - u_j(0))^e
    std::vector<std::vector<Jet>> pw(inputs.size());
    for (std::size_t j = 0; j < inputs.size(); ++j) {
        Jet h = inputs[j].truncated(K);
        h.coef(0) = 0.0;
        pw[j].push_back(Jet(m, K, 1.0));
        for (int e = 1; e <= K; ++e) pw[j].push_back(pw[j].back() * h);
    }
    Jet r(m, K, 0.0);
    for (std::size_t i = 0; i < P.size_upto(K); ++i) {
        double c = poly.coef(i);
        if (c == 0.0) continue;
        const std::uint8_t* e = P.exponents(i);
        Jet t(m, K, c);
        for (std::size_t j = 0; j < inputs.size(); ++j)
            if (e[j]) t = t * pw[j][e[j]];
        r += t;
    }
    return r;
}

std::vector<Jet> invert(std::vector<Jet> a, int n) {
    std::vector<Jet> inv(n * n);
    int m = a[0].nvars(), K = a[0].order();
    for (auto& x : a) K = std::min(K, x.order());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            a[i * n + j] = a[i * n + j].truncated(K);
            inv[i * n + j] = Jet(m, K, i == j ? 1.0 : 0.0);
        }
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col].value()) > std::abs(a[piv * n + col].value())) piv = r;
        if (a[piv * n + col].value() == 0.0) throw Error(ErrorKind::SingularMetric, "singular jet matrix");
        if (piv != col)
            for (int j = 0; j < n; ++j) {
                std::swap(a[piv * n + j], a[col * n + j]);
                std::swap(inv[piv * n + j], inv[col * n + j]);
            }
        Jet rp = reciprocal(a[col * n + col]);
        for (int j = 0; j < n; ++j) {
            a[col * n + j] = a[col * n + j] * rp;
            inv[col * n + j] = inv[col * n + j] * rp;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            Jet f = a[r * n + col];
            if (f.is_constant() && f.value() == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                a[r * n + j] -= f * a[col * n + j];
                inv[r * n + j] -= f * inv[col * n + j];
            }
        }
    }
    return inv;
}

}  // namespace nsl
