#include "nsl/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <thread>

#include "nsl/error.hpp"

namespace nsl {

double Rng::normal() {
    if (have_) {
        have_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = uniform(-1.0, 1.0);
        v = uniform(-1.0, 1.0);
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_ = true;
    return u * f;
}

std::vector<PhasePoint> sample_points(int n, const SamplerSpec& spec) {
    if (spec.count <= 0) throw Error(ErrorKind::EmptySampler, "sampler produced no points");
    if (!(spec.p_min > 0.0 && spec.p_max >= spec.p_min && std::isfinite(spec.p_max)))
        throw Error(ErrorKind::Config, "momentum range needs 0 < p_min <= p_max");
    if (!(spec.x_box >= 0.0 && std::isfinite(spec.x_box))) throw Error(ErrorKind::Config, "x box must be >= 0");
    Rng rng(spec.seed);
    std::vector<PhasePoint> pts;
    double lo = std::log(spec.p_min), hi = std::log(spec.p_max);
    for (int k = 0; k < spec.count; ++k) {
        PhasePoint q;
        for (int i = 0; i < n; ++i) q.x.push_back(rng.uniform(-spec.x_box, spec.x_box));
        double norm = 0.0;
        std::vector<double> d(n);
        do {
            norm = 0.0;
            for (auto& c : d) {
                c = rng.normal();
                norm += c * c;
            }
        } while (norm < 1e-20);
        double r = std::exp(rng.uniform(lo, hi)) / std::sqrt(norm);
        for (double c : d) q.p.push_back(c * r);
        pts.push_back(std::move(q));
    }
    return pts;
}

int worker_count() {
    int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("NSL_THREADS")) {
        int cap = std::atoi(env);
        if (cap >= 1) hw = std::min(hw, cap);
    }
    return hw;
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    if (threads <= 0) threads = worker_count();
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errs(count);
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            for (int i = t; i < count; i += threads) {
                try {
                    body(i);
                } catch (...) {
                    errs[i] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace nsl
