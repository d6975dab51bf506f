#pragma once
#include <Eigen/Dense>
#include <vector>

namespace nsl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// dense rank-3 / rank-4 arrays over 0..n-1, index order as written
struct Tensor3 {
    int n = 0;
    std::vector<double> a;
    Tensor3() = default;
    explicit Tensor3(int n_) : n(n_), a(n_ * n_ * n_, 0.0) {}
    double& operator()(int i, int j, int k) { return a[(i * n + j) * n + k]; }
    double operator()(int i, int j, int k) const { return a[(i * n + j) * n + k]; }
};

struct Tensor4 {
    int n = 0;
    std::vector<double> a;
    Tensor4() = default;
    explicit Tensor4(int n_) : n(n_), a(n_ * n_ * n_ * n_, 0.0) {}
    double& operator()(int i, int j, int k, int l) { return a[((i * n + j) * n + k) * n + l]; }
    double operator()(int i, int j, int k, int l) const { return a[((i * n + j) * n + k) * n + l]; }
};

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }
inline double max_abs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace nsl
