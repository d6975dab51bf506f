#pragma once
// Independent numerical cross-checks (finite differences, alternative formulations).
#include "nsl/dynamics.hpp"

namespace nsl {

// Solve V(x, p) = v for p by Newton iteration from p_guess.
std::vector<double> invert_velocity(const SystemDefinition& sys, const std::vector<double>& x,
                                    const Vec& v, std::vector<double> p_guess);

// Gamma^k_ij = -1/2 d^2 Phi^k / dv^i dv^j with Phi(x,v) = Phi~(x, p(x,v)),
// by Richardson-extrapolated central differences in v.
Tensor3 connection_oracle(const SystemDefinition& sys, const PhasePoint& q);

// The modified-Hamiltonian system of H(x,p) = W(x, 1/|p|), which reproduces the
// h = 0 Newtonian system built from W.
SystemDefinition hamiltonian_partner(const Expression& W, int n);

// Max |x_newton(t) - x_hamilton(t)| over the run, equal x0 and initial velocity v0.
double riemannian_hamiltonian_gap(const Expression& W, int n, const std::vector<double>& x0,
                                  const std::vector<double>& v0, const IntegratorConfig& cfg);

// Max mismatch between jet partials (orders 1, 2) of V and Theta and central
// differences of the plain evaluator, in units of max(1, |partial|).
double system_probe_gap(const SystemDefinition& sys, const PhasePoint& q, double step = 1e-3);

}  // namespace nsl
