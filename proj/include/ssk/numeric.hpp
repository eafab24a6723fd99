#pragma once

// Small numerical utilities shared across modules: compensated summation
// with fixed chunking (so parallel partitions reproduce serial results),
// Gauss-Legendre panel rules, and bracketed root finding.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "ssk/errors.hpp"

namespace ssk {

inline constexpr std::size_t kSumChunk = 1024; // fixed reduction chunk, recorded in manifests

// Kahan-Babuska compensated accumulator.
template <typename T>
class KahanSum {
public:
    void add(T x) {
        const T y = x - comp_;
        const T t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    T value() const { return sum_; }

private:
    T sum_{};
    T comp_{};
};

// Compensated sum of f(i) for i in [0, n), accumulated in fixed chunks of
// kSumChunk and combined in chunk order. Identical results for any
// parallel partitioning that respects the chunk boundaries.
template <typename T, typename F>
T chunked_sum(std::size_t n, F&& f) {
    KahanSum<T> total;
    for (std::size_t c0 = 0; c0 < n; c0 += kSumChunk) {
        const std::size_t c1 = std::min(n, c0 + kSumChunk);
        KahanSum<T> chunk;
        for (std::size_t i = c0; i < c1; ++i) chunk.add(f(i));
        total.add(chunk.value());
    }
    return total.value();
}

// Gauss-Legendre nodes/weights on [-1,1]; Newton on Legendre polynomials.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline QuadratureRule gauss_legendre(int k) {
    QuadratureRule r;
    r.nodes.resize(k);
    r.weights.resize(k);
    for (int i = 0; i < (k + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (k + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < k; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = k * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.nodes[i] = -x;
        r.nodes[k - 1 - i] = x;
        r.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        r.weights[k - 1 - i] = r.weights[i];
    }
    return r;
}

// Map a [-1,1] rule onto [a,b].
inline void map_panel(const QuadratureRule& rule, double a, double b,
                      std::vector<double>& xs, std::vector<double>& ws) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    xs.resize(rule.nodes.size());
    ws.resize(rule.nodes.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        xs[i] = mid + half * rule.nodes[i];
        ws[i] = half * rule.weights[i];
    }
}

// Bisection + Newton polish for a strictly increasing function on (lo, hi)
// with f(lo) < 0 < f(hi). Returns the root.
inline double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                          double xtol, int max_iter = 400) {
    double flo = f(lo);
    double fhi = f(hi);
    if (!(flo < 0.0) || !(fhi > 0.0))
        throw NumericError("bisect_root: bracket does not straddle the root");
    for (int it = 0; it < max_iter && hi - lo > xtol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    return 0.5 * (lo + hi);
}

inline bool nearly_equal(double a, double b, double rel, double abs_tol = 0.0) {
    return std::abs(a - b) <= std::max(abs_tol, rel * std::max(std::abs(a), std::abs(b)));
}

} // namespace ssk
