#pragma once
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nsl/expression.hpp"

namespace nsl {

// doubles drawn from raw generator bits, so values do not depend on the
// standard library's distribution code
class Rng {
public:
    explicit Rng(std::uint64_t seed) : g_(seed) {}
    double uniform() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();

private:
    std::mt19937_64 g_;
    bool have_ = false;
    double spare_ = 0.0;
};

struct SamplerSpec {
    int count = 100;
    std::uint64_t seed = 42;
    double p_min = 0.1, p_max = 10.0;  // |p| log-uniform in [p_min, p_max]
    double x_box = 1.0;                // x uniform in [-x_box, x_box]^n
};

std::vector<PhasePoint> sample_points(int n, const SamplerSpec& spec);

// worker count: NSL_THREADS caps hardware concurrency
int worker_count();
// static-chunked loop; results must be written by index for determinism
void parallel_for(int count, int threads, const std::function<void(int)>& body);

std::string fmt17(double v);

}  // namespace nsl
