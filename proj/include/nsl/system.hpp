#pragma once
// Systems in p-representation: dx/dt = V(x,p), dp/dt = Theta(x,p).
#include <functional>
#include <string>
#include <vector>

#include "nsl/expression.hpp"
#include "nsl/tensor.hpp"

namespace nsl {

enum class SystemKind { Explicit, ModifiedHamiltonian, RiemannianEuclidean };

class SystemDefinition {
public:
    // fills V (order ov) and Theta (order ot) at q
    using Evaluator =
        std::function<void(const PhasePoint&, int ov, int ot, std::vector<Jet>& V, std::vector<Jet>& Th)>;

    SystemDefinition(int n, SystemKind kind, Evaluator ev, std::string label);

    int n() const { return n_; }
    SystemKind kind() const { return kind_; }
    const std::string& label() const { return label_; }

    void jets(const PhasePoint& q, int ov, int ot, std::vector<Jet>& V, std::vector<Jet>& Th) const;
    Vec velocity(const PhasePoint& q) const;
    Vec force(const PhasePoint& q) const;

private:
    int n_;
    SystemKind kind_;
    Evaluator ev_;
    std::string label_;
};

SystemDefinition make_explicit(int n, std::vector<Expression> V, std::vector<Expression> Theta,
                               std::string label = "explicit");
// V = H_p / <p|H_p>, Theta = -H_x / <p|H_p>
SystemDefinition build_modified_hamiltonian(const Expression& H, int n);
// same, with H given as a function of the 2n phase-variable jets
using HamiltonianFn = std::function<Jet(const std::vector<Jet>& vars)>;
SystemDefinition build_modified_hamiltonian(HamiltonianFn H, int n, std::string label);
// Euclidean Newtonian system of the W/h family: p = v, Theta = F(x, v).
// W is over Scope::phase-free slots (x1..xn, v); h over (w).
SystemDefinition build_riemannian_euclidean(const Expression& W, const Expression& h, int n);
Scope riemannian_w_scope(int n);
Scope riemannian_h_scope();

struct KinematicFrame {
    Vec V;
    Mat g_up;    // g_up(i,r) = dV^i/dp_r
    Mat g_down;  // inverse of g_up
    Vec W;       // W^s = sum_r dV^r/dp_s p_r
    double Omega = 0.0;
    Mat P;       // P(i,j) = delta - W^i p_j / Omega
};

// Degeneracy measures that do not change when V or p is rescaled:
// |det g| over the product of its row norms (Hadamard bound, so in [0,1]),
// and |<p|W>| over |p||W|.
double relative_det(const Mat& g);
double relative_omega(const Vec& p, const Vec& W);
// throw SingularMetric / DegenerateOmega below 1e-12
void require_regular_metric(const Mat& g_up);
void require_nondegenerate_omega(const Vec& p, const Vec& W);

KinematicFrame frame_at(const SystemDefinition& sys, const PhasePoint& q);

struct RegularitySample {
    PhasePoint q;
    double det = 0.0, vnorm = 0.0, omega = 0.0;
    bool metric_ok = false, velocity_ok = false, omega_ok = false;
    std::string error;
    bool ok() const { return metric_ok && velocity_ok && omega_ok && error.empty(); }
};

struct RegularityReport {
    std::vector<RegularitySample> samples;
    bool pass = false;
    // det g_up != 0 is local evidence only; global injectivity is not decidable by sampling.
    // metric_ok and omega_ok use relative_det and relative_omega against tol.
    std::string note = "diffeomorphism checked locally only (det g_up != 0 at samples)";
};

RegularityReport check_regularity(const SystemDefinition& sys, const std::vector<PhasePoint>& samples,
                                  double tol = 1e-12);

// Phi~^k = sum_i dV^k/dx^i V^i + sum_i dV^k/dp_i Theta_i
Vec phi_pullback(const SystemDefinition& sys, const PhasePoint& q);

// Canonical connection as jets of the given order, entries [k][i][j] row-major.
std::vector<Jet> canonical_connection_jets(const SystemDefinition& sys, const PhasePoint& q, int order);
Tensor3 canonical_connection(const SystemDefinition& sys, const PhasePoint& q);

}  // namespace nsl
