#pragma once
// Scalar formulas over named slots, evaluated on plain doubles or on jets.
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nsl/jet.hpp"

namespace nsl {

// Maps identifiers to input slots.  Families are x<k>, p<k>, y<k>; singles are
// plain names such as nu, v, w.
class Scope {
public:
    static Scope phase(int n);   // x1..xn -> 0..n-1, p1..pn -> n..2n-1
    static Scope params(int m);  // y1..ym
    Scope& family(char prefix, int count);
    Scope& single(const std::string& name);
    int size() const { return size_; }
    int dimension() const { return dim_; }
    // slot index, or throws ParseError (unknown identifier / index exceeds dimension)
    int resolve(const std::string& name, std::size_t offset) const;

private:
    struct Family {
        char prefix;
        int count, base;
    };
    std::vector<Family> fams_;
    std::vector<std::pair<std::string, int>> singles_;
    int size_ = 0, dim_ = 0;
};

class Expression {
public:
    struct Node;
    Expression() = default;
    const std::string& text() const { return *text_; }
    int slots() const { return slots_; }
    explicit operator bool() const { return root_ != nullptr; }

    double eval(std::span<const double> in) const;
    Jet eval(std::span<const Jet> in) const;
    // prefix rendering of the tree, e.g. add(pow(p1,2),pow(p2,2))
    std::string describe() const;

private:
    friend Expression parse_expression(const std::string&, const Scope&);
    std::shared_ptr<const Node> root_;
    std::shared_ptr<const std::string> text_;
    int slots_ = 0;
};

Expression parse_expression(const std::string& text, const Scope& scope);
inline Expression parse_expression(const std::string& text, int n) {
    return parse_expression(text, Scope::phase(n));
}

struct PhasePoint {
    std::vector<double> x, p;
    int n() const { return static_cast<int>(x.size()); }
    std::vector<double> flat() const;  // x then p
};

// Jet of a phase-space expression over (x1..xn, p1..pn), order 0..3.
Jet evaluate_jet(const Expression& e, const PhasePoint& q, int order);
// Same without the order cap; used where the chain rule needs more.
Jet evaluate_jet_any(const Expression& e, const PhasePoint& q, int order);
// Variable jets for the 2n phase slots.
std::vector<Jet> phase_variables(const PhasePoint& q, int order);

// Nested central differences for the partial named by the slot list
// (e.g. {0, 3} = d^2/dx1 dp2 for n = 2).
double finite_difference_probe(const Expression& e, const PhasePoint& q, std::span<const int> slots,
                               double step);

}  // namespace nsl
