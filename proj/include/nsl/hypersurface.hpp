#pragma once
// Parametric hypersurfaces, the Pfaff system for nu, and the normal shift.
#include <vector>

#include "nsl/normality.hpp"

namespace nsl {

struct Hypersurface {
    int n = 0;                                   // ambient dimension
    std::vector<Expression> embedding;           // x^s(y1..y_{n-1})
    std::vector<std::pair<double, double>> domain;
    std::vector<int> grid;                       // node counts per parameter
    int params() const { return n - 1; }
};

Hypersurface make_surface(int n, const std::vector<std::string>& embedding,
                          std::vector<std::pair<double, double>> domain, std::vector<int> grid);

struct SurfaceFrame {
    Vec y, x;
    Mat taus;    // n x (n-1), column i = tau_i
    Vec normal;  // unit Euclidean norm, cofactor orientation
    Mat dn;      // (n-1) x n, dn(i,s) = nabla_{tau_i} n_s with Gamma at p = nu n
    Mat b;       // (n-1) x (n-1) second fundamental form
    double nu = 0.0;
    PhasePoint q;  // (x, nu n)
};

SurfaceFrame surface_frame(const SystemDefinition& sys, const ConnectionField& conn, const Hypersurface& surf,
                           const Vec& y, double nu);

// d nu / d y^i
Vec pfaff_rhs(const SystemDefinition& sys, const ConnectionField& conn, const Hypersurface& surf, const Vec& y,
              double nu);

struct NuGrid {
    std::vector<int> counts;
    std::vector<Vec> nodes;  // row-major, last parameter fastest
    std::vector<double> nu;
    double path_residual = 0.0;  // max two-route mismatch over cells
    std::size_t index(const std::vector<int>& multi) const;
};

std::vector<Vec> grid_nodes(const Hypersurface& surf, std::vector<int>& counts);

// Integrates along axis-parallel RK4 paths from the start node (default: lower corner).
NuGrid solve_nu(const SystemDefinition& sys, const ConnectionField& conn, const Hypersurface& surf, double nu0,
                std::vector<int> start = {});

// theta_ij - theta_ji from the A/B/C tensors; exactly antisymmetric
Mat compatibility_residual(const SystemDefinition& sys, const ConnectionField& conn, const Hypersurface& surf,
                           const Vec& y, double nu);

struct NuSource {
    bool constant = true;
    double value = 1.0;
    NuGrid grid;
    static NuSource fixed(double v) { return {true, v, {}}; }
    static NuSource solved(NuGrid g) { return {false, 0.0, std::move(g)}; }
};

struct ShiftRun {
    int n = 0;
    std::vector<Vec> ys;
    std::vector<double> nus;
    std::vector<Trajectory> trajectories;
};

ShiftRun simulate_shift(const SystemDefinition& sys, const ConnectionField& conn, const Hypersurface& surf,
                        const NuSource& nu, const IntegratorConfig& cfg, int threads = 1);

struct OrthogonalityReport {
    std::vector<double> times;
    std::vector<double> max_phi;  // per time, over trajectories and i
    double max_phi_overall = 0.0;
    bool normal = true;
    double first_violation = -1.0;
};

OrthogonalityReport verify_orthogonality(const ShiftRun& run, double tol);

std::string shift_csv(const ShiftRun& run);
std::string trajectory_csv(const Trajectory& tr);

}  // namespace nsl
