#pragma once
// Truncated multivariate Taylor polynomials ("jets").
// Coefficients are Taylor coefficients, not derivatives: the partial
// d^a f equals a! * coef(a).  Monomials are stored graded by total degree,
// so the order-k layout is a prefix of every higher-order layout over the
// same variables and truncation is a resize.
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace nsl {

class Layout {
public:
    // cached, thread-safe; the reference stays valid for the program lifetime
    static const Layout& get(int nvars, int order);

    int nvars() const { return nvars_; }
    int order() const { return order_; }
    std::size_t size() const { return size_[order_]; }
    // number of monomials of total degree <= d
    std::size_t size_upto(int d) const { return size_[d]; }
    const std::uint8_t* exponents(std::size_t idx) const { return &exps_[idx * nvars_]; }
    int degree(std::size_t idx) const { return deg_[idx]; }
    // -1 when absent or above the layout order
    long index_of(std::span<const int> exps) const;

    struct Term {
        std::uint32_t j, k;
    };
    // products: for coefficient i of the left factor, terms (j,k) with deg i + deg j <= order
    std::span<const Term> product_row(std::size_t i) const {
        return {mul_.data() + mul_start_[i], mul_.data() + mul_start_[i + 1]};
    }
    // d/dvar: for each target index t < size_upto(order-1): source index and factor
    struct DerivTerm {
        std::uint32_t src;
        double factor;
    };
    std::span<const DerivTerm> derivative_map(int var) const {
        return {dmap_.data() + var * size_[order_ > 0 ? order_ - 1 : 0],
                size_[order_ > 0 ? order_ - 1 : 0]};
    }

private:
    Layout(int nvars, int order);
    int nvars_, order_;
    std::vector<std::size_t> size_;
    std::vector<std::uint8_t> exps_;
    std::vector<std::uint8_t> deg_;
    std::vector<Term> mul_;
    std::vector<std::size_t> mul_start_;
    std::vector<DerivTerm> dmap_;
};

class Jet {
public:
    Jet() = default;
    Jet(int nvars, int order, double value = 0.0);
    static Jet variable(int nvars, int order, int var, double value);

    int nvars() const { return L_->nvars(); }
    int order() const { return L_->order(); }
    const Layout& layout() const { return *L_; }
    double value() const { return c_[0]; }
    double coef(std::size_t i) const { return c_[i]; }
    double& coef(std::size_t i) { return c_[i]; }
    std::size_t size() const { return c_.size(); }
    bool is_constant() const;

    // partial derivative named by a list of variable indices, e.g. {0,0,3}
    double partial(std::initializer_list<int> vars) const;
    double partial(std::span<const int> vars) const;
    Jet d(int var) const;  // one order lower
    Jet truncated(int order) const;

    Jet& operator+=(const Jet& o);
    Jet& operator-=(const Jet& o);
    Jet& operator*=(double s);
    Jet& operator+=(double s) {
        c_[0] += s;
        return *this;
    }

    friend Jet operator+(const Jet& a, const Jet& b);
    friend Jet operator-(const Jet& a, const Jet& b);
    friend Jet operator*(const Jet& a, const Jet& b);
    friend Jet operator/(const Jet& a, const Jet& b);
    friend Jet operator-(const Jet& a);
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator+(Jet a, double s) { return a += s; }
    friend Jet operator+(double s, Jet a) { return a += s; }
    friend Jet operator-(Jet a, double s) { return a += -s; }

    // f(a) from the derivatives f^(k)(a0), k = 0..order
    friend Jet compose_univariate(const Jet& a, std::span<const double> derivs);

private:
    Jet(const Layout* L) : L_(L), c_(L->size(), 0.0) {}
    const Layout* L_ = nullptr;
    std::vector<double> c_;
    friend Jet product(const Jet&, const Jet&, int);
};

// a*b truncated to the given order (<= min of operand orders)
Jet product(const Jet& a, const Jet& b, int order);
Jet reciprocal(const Jet& a);
Jet jet_sqrt(const Jet& a);
Jet jet_exp(const Jet& a);
Jet jet_log(const Jet& a);
Jet jet_sin(const Jet& a);
Jet jet_cos(const Jet& a);
Jet jet_tan(const Jet& a);
Jet jet_abs(const Jet& a);
Jet jet_atan2(const Jet& a, const Jet& b);
Jet jet_pow(const Jet& a, const Jet& b);
Jet jet_pow(const Jet& a, double c);

// Substitute jets into a Taylor polynomial: poly is a jet over m' variables
// expanded about `center`, inputs[j] are m' jets whose values equal center[j].
// Returns poly(inputs - center) truncated to the inputs' order.
Jet compose(const Jet& poly, std::span<const Jet> inputs);

// Jet-valued n x n matrix inverse (row-major), Gauss-Jordan with pivoting on values.
std::vector<Jet> invert(std::vector<Jet> m, int n);

}  // namespace nsl
