#include "nsl/normality.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nsl/error.hpp"
#include "nsl/util.hpp"

namespace nsl {

double NormalityResidual::weak_max() const { return std::max(nsl::max_abs(weak1), nsl::max_abs(weak2)); }

double NormalityResidual::additional_max() const {
    return std::max({nsl::max_abs(addA), nsl::max_abs(addB), nsl::max_abs(addC)});
}

double NormalityResidual::max_abs() const { return std::max(weak_max(), additional_max()); }

double PointRow::max_abs() const { return std::max({weak1_max, weak2_max, addA_max, addB_max, addC_max}); }

ABCTensors abc_tensors(const LocalGeometry& g) {
    int n = g.n;
    const Vec& W = g.frame.W;
    const Vec& U = g.U;
    double om = g.frame.Omega;
    const auto& R = g.curv.R;
    const auto& D = g.curv.D;
    Eigen::Map<const Vec> p(g.q.p.data(), n);
    ABCTensors t;
    t.A = g.dWp.transpose();
    Mat skewA = t.A - t.A.transpose();
    t.B.resize(n, n);
    t.C.resize(n, n);
    for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
            double b = g.dUp(s, r) - g.nW(r, s);
            double c = g.nU(s, r);
            for (int m = 0; m < n; ++m) {
                b += skewA(m, r) * U[s] * p[m] / om;
                c -= (U[r] * g.dUp(s, m) * p[m] + U[s] * g.nW(m, r) * p[m]) / om;
                for (int k = 0; k < n; ++k) {
                    b += W[k] * p[m] * D(m, r, k, s);
                    for (int q = 0; q < n; ++q) c -= D(m, q, k, s) * U[r] * p[m] * W[k] * p[q] / om;
                }
            }
            for (int q = 0; q < n; ++q)
                for (int k = 0; k < n; ++k) c -= 0.5 * R(q, k, r, s) * W[k] * p[q];
            t.B(r, s) = b;
            t.C(r, s) = c;
        }
    // lambda (n-1) = sum B^r_s P^s_r
    t.lambda = (t.B.cwiseProduct(g.frame.P.transpose())).sum() / (n - 1);
    return t;
}

ABCTensors abc_tensors(const SystemDefinition& sys, const ConnectionField& conn, const PhasePoint& q) {
    return abc_tensors(local_geometry(sys, conn, q));
}

void weak_residuals(const LocalGeometry& g, const WeakFieldBundle& w, Vec& weak1, Vec& weak2) {
    const Mat& P = g.frame.P;
    weak1 = P * w.alpha;              // sum_r alpha^r P^k_r
    weak2 = P.transpose() * w.eta;    // sum_r eta_r P^r_k
}

std::pair<Vec, Vec> weak_residuals(const SystemDefinition& sys, const ConnectionField& conn, const PhasePoint& q) {
    auto g = local_geometry(sys, conn, q);
    Vec a, b;
    weak_residuals(g, weak_fields(g), a, b);
    return {a, b};
}

AdditionalResidual additional_residuals(const LocalGeometry& g) {
    AdditionalResidual r;
    if (g.n < 3) {
        // the additional equations are vacuous for n = 2
        r.addA = r.addB = r.addC = Mat(0, 0);
        return r;
    }
    ABCTensors t = abc_tensors(g);
    const Mat& P = g.frame.P;
    r.addA = P * (t.A - t.A.transpose()) * P.transpose();
    r.addC = P.transpose() * (t.C - t.C.transpose()) * P;
    r.addB = P * t.B * P - t.lambda * P;
    return r;
}

AdditionalResidual additional_residuals(const SystemDefinition& sys, const ConnectionField& conn,
                                        const PhasePoint& q) {
    return additional_residuals(local_geometry(sys, conn, q));
}

NormalityResidual normality_at(const SystemDefinition& sys, const ConnectionField& conn, const PhasePoint& q) {
    auto g = local_geometry(sys, conn, q);
    NormalityResidual r;
    auto w = weak_fields(g);
    weak_residuals(g, w, r.weak1, r.weak2);
    auto a = additional_residuals(g);
    r.addA = a.addA;
    r.addB = a.addB;
    r.addC = a.addC;
    r.scale = 1.0 + w.alpha.norm() + w.eta.norm();
    if (g.n >= 3) {
        auto t = abc_tensors(g);
        r.scale += t.A.norm() + t.B.norm() + t.C.norm();
    }
    return r;
}

BatchReport normality_report(const SystemDefinition& sys, const ConnectionField& conn,
                             const std::vector<PhasePoint>& points, const Tolerances& tol, int threads) {
    if (points.empty()) throw Error(ErrorKind::EmptySampler, "sampler produced no points");
    BatchReport rep;
    rep.rows.resize(points.size());
    parallel_for(static_cast<int>(points.size()), threads, [&](int i) {
        PointRow& row = rep.rows[i];
        row.q = points[i];
        try {
            auto r = normality_at(sys, conn, points[i]);
            row.weak1_max = max_abs(r.weak1);
            row.weak2_max = max_abs(r.weak2);
            row.additional_applicable = sys.n() >= 3;
            row.addA_max = max_abs(r.addA);
            row.addB_max = max_abs(r.addB);
            row.addC_max = max_abs(r.addC);
            row.normalized_max = r.normalized_max();
            row.pass = std::max(row.weak1_max, row.weak2_max) <= tol.weak &&
                       std::max({row.addA_max, row.addB_max, row.addC_max}) <= tol.additional;
        } catch (const Error& e) {
            if (e.is_config()) throw;
            row.error = kind_name(e.kind());
            row.pass = false;
        }
    });
    std::vector<double> m;
    for (const auto& row : rep.rows) {
        if (!row.error.empty()) {
            ++rep.errors;
            continue;
        }
        if (!row.pass) ++rep.violations;
        m.push_back(row.max_abs());
        rep.max_normalized = std::max(rep.max_normalized, row.normalized_max);
    }
    if (!m.empty()) {
        rep.max_residual = *std::max_element(m.begin(), m.end());
        std::sort(m.begin(), m.end());
        rep.median_residual = m.size() % 2 ? m[m.size() / 2] : 0.5 * (m[m.size() / 2 - 1] + m[m.size() / 2]);
    }
    rep.pass = rep.violations == 0 && rep.errors == 0;
    return rep;
}

std::string residual_csv(const BatchReport& rep, int n) {
    std::ostringstream os;
    for (int i = 1; i <= n; ++i) os << 'x' << i << ',';
    for (int i = 1; i <= n; ++i) os << 'p' << i << ',';
    os << "weak1_max,weak2_max,addA_max,addB_max,addC_max,verdict\n";
    for (const auto& row : rep.rows) {
        for (double v : row.q.x) os << fmt17(v) << ',';
        for (double v : row.q.p) os << fmt17(v) << ',';
        if (!row.error.empty()) {
            os << ",,,,,ERROR:" << row.error << '\n';
            continue;
        }
        os << fmt17(row.weak1_max) << ',' << fmt17(row.weak2_max) << ',';
        if (row.additional_applicable)
            os << fmt17(row.addA_max) << ',' << fmt17(row.addB_max) << ',' << fmt17(row.addC_max) << ',';
        else
            os << "NA,NA,NA,";
        os << (row.pass ? "PASS" : "FAIL") << '\n';
    }
    return os.str();
}

}  // namespace nsl
