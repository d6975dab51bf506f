#pragma once
// Extended affine connections Gamma^k_ij(x,p), curvatures, force covector, gauges.
#include <array>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nsl/system.hpp"

namespace nsl {

// jets of components at q; tensor entries row-major
using JetField = std::function<std::vector<Jet>(const PhasePoint&, int order)>;

class ConnectionField {
public:
    ConnectionField(int n, JetField eval, std::string source);
    static ConnectionField zero(int n);
    static ConnectionField canonical(const SystemDefinition& sys);
    // keys (k,i,j), 0-based; missing entries are zero, the (j,i) twin is filled in
    static ConnectionField from_expressions(int n, const std::map<std::array<int, 3>, Expression>& entries);

    int n() const { return n_; }
    const std::string& source() const { return source_; }
    // entries [k][i][j]
    std::vector<Jet> jets(const PhasePoint& q, int order) const { return eval_(q, order); }
    Tensor3 at(const PhasePoint& q) const;

private:
    int n_;
    JetField eval_;
    std::string source_;
};

// symmetric T^k_ij(x,p)
class GaugeTensor {
public:
    GaugeTensor(int n, JetField eval);
    // coefficients uniform in [-1,1], polynomial of degree <= 2 in (x,p), symmetric in (i,j)
    static GaugeTensor random(int n, std::uint64_t seed);
    static GaugeTensor constant(const Tensor3& t);
    int n() const { return n_; }
    // throws AsymmetricGauge when T^k_ij != T^k_ji beyond 1e-12
    std::vector<Jet> jets(const PhasePoint& q, int order) const;

private:
    int n_;
    JetField eval_;
};

// Horizontal covariant derivative of a field with `up` upper then `down` lower
// indices.  The derivative index m is appended last; the result is one order
// lower than the field (or the connection's order, if smaller).
std::vector<Jet> covariant_derivative(std::span<const Jet> field, int up, int down,
                                      std::span<const Jet> gamma, const PhasePoint& q);
// Momentum gradient d/dp_m, index appended last.
std::vector<Jet> momentum_gradient(std::span<const Jet> field, int n);

struct CurvaturePair {
    Tensor4 R;  // R(k,r,i,j) = R^k_{rij}
    Tensor4 D;  // D(k,r,i,j) = D^{kr}_{ij} = -dGamma^k_ij/dp_r
};

CurvaturePair curvatures(const ConnectionField& conn, const PhasePoint& q);
CurvaturePair curvatures_from_jets(std::span<const Jet> gamma, const PhasePoint& q);

// Q_i = Theta_i - sum Gamma^k_ij p_k V^j
Vec force_covector(const SystemDefinition& sys, const ConnectionField& conn, const PhasePoint& q);
JetField force_covector_field(const SystemDefinition& sys, const ConnectionField& conn);

struct GaugedPair {
    ConnectionField conn;
    JetField Q;
};
// Gamma' = Gamma + T, Q'_i = Q_i - sum T^k_is p_k V^s
GaugedPair gauge_transform(const SystemDefinition& sys, const ConnectionField& conn, const JetField& Q,
                           const GaugeTensor& T);
ConnectionField add_gauge(const ConnectionField& conn, const GaugeTensor& T);

}  // namespace nsl
