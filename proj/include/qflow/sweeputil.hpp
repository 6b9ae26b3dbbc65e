#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace qflow {

// Runs f(i) for i in [0, n); results must go into preallocated slots so the
// outcome is independent of scheduling.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& f) {
    if (jobs <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    jobs = std::min(jobs, n);
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mtx;
    pool.reserve(jobs);
    for (int t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mtx);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// Aitken delta-squared limit estimate from the last three stride-spaced
// entries; exact for a geometric approach to the limit.
inline double aitken_extrapolate(const Eigen::VectorXd& series, int stride = 1) {
    const int n = static_cast<int>(series.size());
    if (n < 3 || stride < 1 || n - 1 - 2 * stride < 0) return n > 0 ? series[n - 1] : 0.0;
    const double x0 = series[n - 1 - 2 * stride];
    const double x1 = series[n - 1 - stride];
    const double x2 = series[n - 1];
    const double d1 = x1 - x0, d2 = x2 - x1;
    const double denom = d2 - d1;
    if (std::abs(denom) < 1e-300) return x2;
    const double est = x2 - d2 * d2 / denom;
    // a diverging or alternating tail is not extrapolable; report the last value
    if (!std::isfinite(est)) return x2;
    return est;
}

// true if the tail of the series (from index `from`) is nonincreasing up to
// a small slack
inline bool tail_decreasing(const Eigen::VectorXd& series, int from, double slack) {
    for (int i = std::max(from, 0); i + 1 < series.size(); ++i) {
        if (series[i + 1] > series[i] + slack) return false;
    }
    return true;
}

// Neville polynomial extrapolation of (h_i, y_i) to h = 0; the classic
// deferred-approach-to-the-limit tableau for a known step variable.
inline double neville_extrapolate_zero(const Eigen::VectorXd& h, const Eigen::VectorXd& y) {
    const int n = static_cast<int>(y.size());
    std::vector<double> t(y.data(), y.data() + n);
    for (int j = 1; j < n; ++j) {
        for (int i = n - 1; i >= j; --i) {
            const double denom = h[i - j] - h[i];
            if (denom == 0.0) return t[n - 1];
            t[i] = t[i] + (t[i] - t[i - 1]) * h[i] / denom;
        }
    }
    return t[n - 1];
}

// Limit estimate of a sweep series whose corrections are powers of
// cp^exponent; uses the trailing `points` samples.
inline double power_law_limit(const Eigen::VectorXd& series, const Eigen::VectorXd& cps,
                              double exponent, int points = 7) {
    const int n = static_cast<int>(series.size());
    points = std::min(points, n);
    if (points < 2 || exponent <= 0.0) return n > 0 ? series[n - 1] : 0.0;
    Eigen::VectorXd h(points), y(points);
    for (int i = 0; i < points; ++i) {
        h[i] = std::pow(cps[n - points + i], exponent);
        y[i] = series[n - points + i];
    }
    return neville_extrapolate_zero(h, y);
}

}  // namespace qflow
