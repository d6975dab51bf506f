#include "nsl/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "nsl/error.hpp"

namespace nsl {

// ---------------------------------------------------------------- scope

Scope Scope::phase(int n) {
    Scope s;
    s.family('x', n).family('p', n);
    s.dim_ = n;
    return s;
}

Scope Scope::params(int m) {
    Scope s;
    s.family('y', m);
    s.dim_ = m;
    return s;
}

Scope& Scope::family(char prefix, int count) {
    fams_.push_back({prefix, count, size_});
    size_ += count;
    return *this;
}

Scope& Scope::single(const std::string& name) {
    singles_.push_back({name, size_});
    size_ += 1;
    return *this;
}

int Scope::resolve(const std::string& name, std::size_t offset) const {
    for (const auto& [nm, slot] : singles_)
        if (nm == name) return slot;
    if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'p' || name[0] == 'y')) {
        bool digits = true;
        for (std::size_t i = 1; i < name.size(); ++i) digits = digits && std::isdigit((unsigned char)name[i]);
        if (digits && name[1] != '0') {
            long k = std::strtol(name.c_str() + 1, nullptr, 10);
            for (const auto& f : fams_)
                if (f.prefix == name[0]) {
                    if (k > f.count)
                        throw ParseError("variable index exceeds dimension: '" + name + "'", offset);
                    return f.base + static_cast<int>(k) - 1;
                }
        }
    }
    throw ParseError("unknown identifier '" + name + "'", offset);
}

// ---------------------------------------------------------------- AST

enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Sqrt, Sin, Cos, Tan, Exp, Log, Abs, Atan2 };

struct Expression::Node {
    Op op;
    double num = 0.0;
    int slot = -1;
    std::string name;  // variable or function name
    std::size_t begin = 0, end = 0;
    std::vector<std::shared_ptr<const Node>> kids;
};

using NodeP = std::shared_ptr<const Expression::Node>;

namespace {

struct FnInfo {
    const char* name;
    Op op;
    int arity;
};
const FnInfo kFns[] = {{"sqrt", Op::Sqrt, 1}, {"sin", Op::Sin, 1},   {"cos", Op::Cos, 1},
                       {"tan", Op::Tan, 1},   {"exp", Op::Exp, 1},   {"log", Op::Log, 1},
                       {"abs", Op::Abs, 1},   {"atan2", Op::Atan2, 2}, {"pow", Op::Pow, 2}};

class Parser {
public:
    Parser(const std::string& s, const Scope& sc) : s_(s), sc_(sc) {}

    NodeP parse() {
        NodeP e = expr();
        skip();
        if (i_ != s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
        return e;
    }

private:
    const std::string& s_;
    const Scope& sc_;
    std::size_t i_ = 0;

    [[noreturn]] void fail(const std::string& msg) { throw ParseError("syntax error: " + msg, i_); }

    void skip() {
        while (i_ < s_.size() && std::isspace((unsigned char)s_[i_])) ++i_;
    }
    bool eat(char c) {
        skip();
        if (i_ < s_.size() && s_[i_] == c) {
            ++i_;
            return true;
        }
        return false;
    }

    static NodeP make(Op op, std::size_t b, std::size_t e, std::vector<NodeP> kids) {
        auto n = std::make_shared<Expression::Node>();
        n->op = op;
        n->begin = b;
        n->end = e;
        n->kids = std::move(kids);
        return n;
    }

    NodeP expr() {
        skip();
        std::size_t b = i_;
        NodeP l = term();
        for (;;) {
            Op op;
            if (eat('+')) op = Op::Add;
            else if (eat('-')) op = Op::Sub;
            else break;
            NodeP r = term();
            l = make(op, b, i_, {l, r});
        }
        return l;
    }

    NodeP term() {
        skip();
        std::size_t b = i_;
        NodeP l = factor();
        for (;;) {
            Op op;
            if (eat('*')) op = Op::Mul;
            else if (eat('/')) op = Op::Div;
            else break;
            NodeP r = factor();
            l = make(op, b, i_, {l, r});
        }
        return l;
    }

    // unary minus binds looser than '^':  -x^2 == -(x^2), 2^-1 == 0.5
    NodeP factor() {
        skip();
        std::size_t b = i_;
        if (eat('-')) {
            NodeP a = factor();
            return make(Op::Neg, b, i_, {a});
        }
        NodeP a = atom();
        if (eat('^')) {
            NodeP e = factor();
            return make(Op::Pow, b, i_, {a, e});
        }
        return a;
    }

    NodeP atom() {
        skip();
        std::size_t b = i_;
        if (i_ >= s_.size()) fail("unexpected end of input");
        char c = s_[i_];
        if (std::isdigit((unsigned char)c) || c == '.') {
            const char* start = s_.c_str() + i_;
            char* stop = nullptr;
            double v = std::strtod(start, &stop);
            if (stop == start) fail("bad number");
            i_ += stop - start;
            auto n = std::make_shared<Expression::Node>();
            n->op = Op::Num;
            n->num = v;
            n->begin = b;
            n->end = i_;
            return n;
        }
        if (std::isalpha((unsigned char)c) || c == '_') {
            while (i_ < s_.size() && (std::isalnum((unsigned char)s_[i_]) || s_[i_] == '_')) ++i_;
            std::string name = s_.substr(b, i_ - b);
            skip();
            if (i_ < s_.size() && s_[i_] == '(') {
                const FnInfo* fn = nullptr;
                for (const auto& f : kFns)
                    if (name == f.name) fn = &f;
                if (!fn) throw ParseError("unknown identifier '" + name + "'", b);
                ++i_;
                std::vector<NodeP> args{expr()};
                while (eat(',')) args.push_back(expr());
                if (!eat(')')) fail("expected ')'");
                if (static_cast<int>(args.size()) != fn->arity)
                    throw ParseError("syntax error: " + name + " takes " + std::to_string(fn->arity) +
                                         " argument(s)",
                                     b);
                auto n = std::make_shared<Expression::Node>();
                n->op = fn->op;
                n->name = name;
                n->begin = b;
                n->end = i_;
                n->kids = std::move(args);
                return n;
            }
            auto n = std::make_shared<Expression::Node>();
            n->op = Op::Var;
            n->slot = sc_.resolve(name, b);
            n->name = name;
            n->begin = b;
            n->end = i_;
            return n;
        }
        if (c == '(') {
            ++i_;
            NodeP e = expr();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }
};

[[noreturn]] void domain_at(const Error& e, const std::string& text, const Expression::Node& n) {
    std::string what = e.what();
    const std::string prefix = std::string(kind_name(ErrorKind::Domain)) + ": ";
    if (what.rfind(prefix, 0) == 0) what = what.substr(prefix.size());
    throw Error(ErrorKind::Domain, what + " in '" + text.substr(n.begin, n.end - n.begin) + "'");
}

[[noreturn]] void domain_msg(const char* msg) { throw Error(ErrorKind::Domain, msg); }

double eval_d(const Expression::Node& n, std::span<const double> in, const std::string& text) {
    auto k = [&](int i) { return eval_d(*n.kids[i], in, text); };
    try {
        switch (n.op) {
            case Op::Num: return n.num;
            case Op::Var: return in[n.slot];
            case Op::Neg: return -k(0);
            case Op::Add: return k(0) + k(1);
            case Op::Sub: return k(0) - k(1);
            case Op::Mul: return k(0) * k(1);
            default: break;
        }
        double a = k(0);
        switch (n.op) {
            case Op::Div: {
                double b = k(1);
                if (b == 0.0) domain_msg("division by zero");
                return a / b;
            }
            case Op::Pow: {
                double b = k(1);
                if (a < 0.0 && b != std::floor(b)) domain_msg("negative base with non-integer exponent");
                if (a == 0.0 && b < 0.0) domain_msg("zero raised to a negative power");
                return std::pow(a, b);
            }
            case Op::Sqrt:
                if (a < 0.0) domain_msg("sqrt of negative argument");
                return std::sqrt(a);
            case Op::Sin: return std::sin(a);
            case Op::Cos: return std::cos(a);
            case Op::Tan:
                if (std::cos(a) == 0.0) domain_msg("tan at a pole");
                return std::tan(a);
            case Op::Exp: return std::exp(a);
            case Op::Log:
                if (a <= 0.0) domain_msg("log of non-positive argument");
                return std::log(a);
            case Op::Abs: return std::abs(a);
            case Op::Atan2: {
                double b = k(1);
                if (a == 0.0 && b == 0.0) domain_msg("atan2(0,0)");
                return std::atan2(a, b);
            }
            default: break;
        }
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Domain || std::string(e.what()).find(" in '") != std::string::npos)
            throw;
        domain_at(e, text, n);
    }
    return 0.0;
}

Jet eval_j(const Expression::Node& n, std::span<const Jet> in, const std::string& text) {
    auto k = [&](int i) { return eval_j(*n.kids[i], in, text); };
    switch (n.op) {
        case Op::Num: return Jet(in[0].nvars(), in[0].order(), n.num);
        case Op::Var: return in[n.slot];
        case Op::Neg: return -k(0);
        case Op::Add: return k(0) + k(1);
        case Op::Sub: return k(0) - k(1);
        case Op::Mul: return k(0) * k(1);
        default: break;
    }
    Jet a = k(0);
    Jet b = n.kids.size() > 1 ? k(1) : Jet();
    try {
        switch (n.op) {
            case Op::Div: return a / b;
            case Op::Pow: return jet_pow(a, b);
            case Op::Sqrt: return jet_sqrt(a);
            case Op::Sin: return jet_sin(a);
            case Op::Cos: return jet_cos(a);
            case Op::Tan: return jet_tan(a);
            case Op::Exp: return jet_exp(a);
            case Op::Log: return jet_log(a);
            case Op::Abs: return jet_abs(a);
            case Op::Atan2: return jet_atan2(a, b);
            default: break;
        }
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Domain) throw;
        domain_at(e, text, n);
    }
    return a;
}

void describe_into(const Expression::Node& n, std::string& out) {
    static const char* names[] = {"", "", "neg", "add", "sub", "mul", "div", "pow",
                                  "sqrt", "sin", "cos", "tan", "exp", "log", "abs", "atan2"};
    if (n.op == Op::Num) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", n.num);
        out += buf;
        return;
    }
    if (n.op == Op::Var) {
        out += n.name;
        return;
    }
    out += names[static_cast<int>(n.op)];
    out += '(';
    for (std::size_t i = 0; i < n.kids.size(); ++i) {
        if (i) out += ',';
        describe_into(*n.kids[i], out);
    }
    out += ')';
}

}  // namespace

Expression parse_expression(const std::string& text, const Scope& scope) {
    bool blank = true;
    for (char c : text) blank = blank && std::isspace((unsigned char)c);
    if (blank) throw ParseError("syntax error: empty expression", 0);
    Expression e;
    e.text_ = std::make_shared<const std::string>(text);
    Parser p(*e.text_, scope);
    e.root_ = p.parse();
    e.slots_ = scope.size();
    return e;
}

double Expression::eval(std::span<const double> in) const { return eval_d(*root_, in, *text_); }

Jet Expression::eval(std::span<const Jet> in) const {
    if (in.empty()) throw std::invalid_argument("jet evaluation needs at least one input");
    return eval_j(*root_, in, *text_);
}

std::string Expression::describe() const {
    std::string s;
    describe_into(*root_, s);
    return s;
}

// ---------------------------------------------------------------- phase helpers

std::vector<double> PhasePoint::flat() const {
    std::vector<double> v(x);
    v.insert(v.end(), p.begin(), p.end());
    return v;
}

std::vector<Jet> phase_variables(const PhasePoint& q, int order) {
    int n = q.n();
    std::vector<Jet> v;
    v.reserve(2 * n);
    for (int i = 0; i < n; ++i) v.push_back(Jet::variable(2 * n, order, i, q.x[i]));
    for (int i = 0; i < n; ++i) v.push_back(Jet::variable(2 * n, order, n + i, q.p[i]));
    return v;
}

Jet evaluate_jet_any(const Expression& e, const PhasePoint& q, int order) {
    if (e.slots() != 2 * q.n()) throw std::invalid_argument("expression is not over this phase space");
    auto v = phase_variables(q, order);
    return e.eval(std::span<const Jet>(v));
}

Jet evaluate_jet(const Expression& e, const PhasePoint& q, int order) {
    if (order < 0 || order > 3) throw std::invalid_argument("jet order must be in 0..3");
    return evaluate_jet_any(e, q, order);
}

double finite_difference_probe(const Expression& e, const PhasePoint& q, std::span<const int> slots,
                               double step) {
    if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
    if (slots.size() > 3) throw std::invalid_argument("probe order above 3");
    std::vector<double> base = q.flat();
    // D_a D_b ... f with one central difference per listed slot
    std::function<double(std::vector<double>&, std::size_t)> rec = [&](std::vector<double>& pt,
                                                                        std::size_t k) -> double {
        if (k == slots.size()) return e.eval(std::span<const double>(pt));
        int s = slots[k];
        double keep = pt[s];
        pt[s] = keep + step;
        double fp = rec(pt, k + 1);
        pt[s] = keep - step;
        double fm = rec(pt, k + 1);
        pt[s] = keep;
        return (fp - fm) / (2.0 * step);
    };
    return rec(base, 0);
}

}  // namespace nsl
