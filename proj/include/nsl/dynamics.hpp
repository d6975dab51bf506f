#pragma once
// Trajectories, variational equations, and the weak-normality fields.
#include <vector>

#include "nsl/connection.hpp"

namespace nsl {

// First-derivative data at a phase point for a (system, connection) pair.
// Matrices are indexed (component, derivative index):
//   nV(i,m) = nabla_m V^i, dVp(i,m) = dV^i/dp_m, nQ(i,m) = nabla_m Q_i, ...
struct LocalGeometry {
    int n = 0;
    PhasePoint q;
    KinematicFrame frame;
    Vec Theta, Q, U;
    Tensor3 Gamma;
    CurvaturePair curv;
    Mat nV, dVp, nW, dWp, nQ, dQp, nU, dUp;
};

// with_u = false skips U and its derivatives (enough for the variational flow)
LocalGeometry local_geometry(const SystemDefinition& sys, const ConnectionField& conn, const PhasePoint& q,
                             bool with_u = true);

struct ExtendedState {
    double t = 0.0;
    PhasePoint q;
    std::vector<Vec> taus;  // variation vectors
    std::vector<Vec> xis;   // momentum-variation covectors
};

struct StateRate {
    Vec dx, dp;
    std::vector<Vec> dtau, dxi;
};

struct IntegratorConfig {
    double step = 1e-3;
    double t_end = 1.0;
};

using Trajectory = std::vector<ExtendedState>;

StateRate phase_rhs(const SystemDefinition& sys, const PhasePoint& q);
StateRate variational_rhs(const SystemDefinition& sys, const ConnectionField& conn, const ExtendedState& s);
// fixed-step classical RK4; every step recorded, the last step shortened to land on t_end
Trajectory integrate(const SystemDefinition& sys, const ConnectionField& conn, const ExtendedState& s0,
                     const IntegratorConfig& cfg);

// phi_i = sum_k tau_i^k p_k
std::vector<double> deviation(const ExtendedState& s);
// d phi / dt = <U|tau> + <xi|W>
double deviation_rate(const LocalGeometry& g, const Vec& tau, const Vec& xi);

struct WeakFieldBundle {
    Vec U, alpha, beta, eta;
    double A = 0.0, B = 0.0;  // phi'' = A phi' + B phi
};

WeakFieldBundle weak_fields(const LocalGeometry& g);
WeakFieldBundle weak_fields(const SystemDefinition& sys, const ConnectionField& conn, const PhasePoint& q);

}  // namespace nsl
