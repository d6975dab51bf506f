#pragma once
// Pointwise residuals of the weak and additional normality equations.
#include <string>
#include <vector>

#include "nsl/dynamics.hpp"

namespace nsl {

struct ABCTensors {
    Mat A;  // A(r,s) = dW^s/dp_r
    Mat B;  // B(r,s) = B^r_s
    Mat C;  // C(r,s) = C_rs
    double lambda = 0.0;
};

struct NormalityResidual {
    Vec weak1, weak2;
    Mat addA, addB, addC;  // empty for n = 2
    double scale = 1.0;    // 1 + |alpha| + |eta| (+ |A| + |B| + |C| for n >= 3)
    double weak_max() const;
    double additional_max() const;
    double max_abs() const;
    double normalized_max() const { return max_abs() / scale; }
};

ABCTensors abc_tensors(const LocalGeometry& g);
ABCTensors abc_tensors(const SystemDefinition& sys, const ConnectionField& conn, const PhasePoint& q);

void weak_residuals(const LocalGeometry& g, const WeakFieldBundle& w, Vec& weak1, Vec& weak2);
std::pair<Vec, Vec> weak_residuals(const SystemDefinition& sys, const ConnectionField& conn, const PhasePoint& q);

struct AdditionalResidual {
    Mat addA, addB, addC;
};
AdditionalResidual additional_residuals(const LocalGeometry& g);
AdditionalResidual additional_residuals(const SystemDefinition& sys, const ConnectionField& conn,
                                        const PhasePoint& q);

NormalityResidual normality_at(const SystemDefinition& sys, const ConnectionField& conn, const PhasePoint& q);

struct Tolerances {
    double weak = 1e-8;
    double additional = 1e-8;
};

struct PointRow {
    PhasePoint q;
    double weak1_max = 0, weak2_max = 0, addA_max = 0, addB_max = 0, addC_max = 0;
    double normalized_max = 0;
    bool additional_applicable = true;
    std::string error;  // evaluation failure, row verdict ERROR
    bool pass = false;
    double max_abs() const;
};

struct BatchReport {
    std::vector<PointRow> rows;
    double max_residual = 0.0, median_residual = 0.0, max_normalized = 0.0;
    int violations = 0, errors = 0;
    bool pass = false;
};

// threads <= 0 means hardware concurrency
BatchReport normality_report(const SystemDefinition& sys, const ConnectionField& conn,
                             const std::vector<PhasePoint>& points, const Tolerances& tol, int threads = 1);

std::string residual_csv(const BatchReport& rep, int n);

}  // namespace nsl
