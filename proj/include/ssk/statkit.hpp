#pragma once

// Statistical tests and fits used by the experiments: Kolmogorov-Smirnov
// against a Gaussian reference, log-log least squares with slope errors,
// and histogramming.

#include <algorithm>
#include <cmath>
#include <vector>

#include "ssk/errors.hpp"

namespace ssk {

struct KsResult {
    double statistic = 0.0; // sup |F_emp - F_ref|
    double p_value = 1.0;
    int n = 0;
    double ref_mean = 0.0;
    double ref_variance = 1.0;
};

inline double gaussian_cdf(double x, double mean, double variance) {
    return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 lambda^2},
// summed until the term drops below 1e-12 (at least 100 terms available).
inline double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 256; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if (k >= 100 && term < 1e-12) break;
        if (term < 1e-300) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

// Two-sided KS test of samples against Normal(mean, variance).
inline KsResult ks_gaussian(std::vector<double> samples, double mean, double variance) {
    if (samples.size() < 50) throw DomainError("ks_gaussian: need at least 50 samples");
    if (!(variance > 0.0)) throw DomainError("ks_gaussian: variance must be positive");
    std::sort(samples.begin(), samples.end());
    const int n = static_cast<int>(samples.size());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
        const double f = gaussian_cdf(samples[i], mean, variance);
        d = std::max(d, std::max((i + 1.0) / n - f, f - static_cast<double>(i) / n));
    }
    KsResult r;
    r.statistic = d;
    r.n = n;
    r.ref_mean = mean;
    r.ref_variance = variance;
    const double sn = std::sqrt(static_cast<double>(n));
    // finite-sample effective argument (Stephens)
    r.p_value = kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
    return r;
}

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    double r2 = 1.0;
};

// Ordinary least squares on (log x, log y).
inline SlopeFit loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 3)
        throw DomainError("loglog_slope: need >= 3 matching points");
    const int n = static_cast<int>(xs.size());
    std::vector<double> lx(n), ly(n);
    for (int i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw DomainError("loglog_slope: inputs must be positive");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx == 0.0) throw DomainError("loglog_slope: degenerate abscissas");
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = ly[i] - (f.intercept + f.slope * lx[i]);
        ss_res += r * r;
    }
    f.r2 = (syy == 0.0) ? 1.0 : 1.0 - ss_res / syy;
    f.stderr_slope = (n > 2) ? std::sqrt(ss_res / (n - 2) / sxx) : 0.0;
    return f;
}

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    long count = 0;
    double density = 0.0;
};

struct Histogram {
    std::vector<HistogramBin> bins;
    long total = 0;
};

// Equal-width bins spanning [min, max]; density integrates to 1.
inline Histogram histogram(const std::vector<double>& samples, int bins) {
    if (samples.empty()) throw DomainError("histogram: empty sample");
    if (bins < 2) throw DomainError("histogram: need at least 2 bins");
    const auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
    double lo = *mn_it, hi = *mx_it;
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double width = (hi - lo) / bins;
    Histogram h;
    h.bins.resize(bins);
    for (int b = 0; b < bins; ++b) {
        h.bins[b].lo = lo + b * width;
        h.bins[b].hi = lo + (b + 1) * width;
    }
    for (double x : samples) {
        int b = static_cast<int>((x - lo) / width);
        b = std::clamp(b, 0, bins - 1);
        ++h.bins[b].count;
    }
    h.total = static_cast<long>(samples.size());
    for (auto& bin : h.bins)
        bin.density = static_cast<double>(bin.count) / (h.total * width);
    return h;
}

// Sample moments with delete-1 jackknife standard errors, computed from
// running power sums.
struct MomentSummary {
    double mean = 0.0, se_mean = 0.0;
    double variance = 0.0, se_variance = 0.0;
    double skewness = 0.0, se_skewness = 0.0;
    double excess_kurtosis = 0.0, se_kurtosis = 0.0;
    long n = 0;
};

namespace detail {
struct CentralMoments {
    double m = 0.0, v = 0.0, sk = 0.0, ku = 0.0;
};
inline CentralMoments central_from_power_sums(double n, double s1, double s2, double s3,
                                              double s4) {
    CentralMoments c;
    c.m = s1 / n;
    const double m2 = s2 / n - c.m * c.m;
    const double m3 = s3 / n - 3.0 * c.m * s2 / n + 2.0 * c.m * c.m * c.m;
    const double m4 = s4 / n - 4.0 * c.m * s3 / n + 6.0 * c.m * c.m * s2 / n -
                      3.0 * c.m * c.m * c.m * c.m;
    c.v = m2;
    c.sk = (m2 > 0.0) ? m3 / std::pow(m2, 1.5) : 0.0;
    c.ku = (m2 > 0.0) ? m4 / (m2 * m2) - 3.0 : 0.0;
    return c;
}
} // namespace detail

inline MomentSummary moment_summary(const std::vector<double>& samples) {
    const long n = static_cast<long>(samples.size());
    if (n < 100) throw DomainError("moment_summary: need at least 100 samples");
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (double x : samples) {
        s1 += x;
        s2 += x * x;
        s3 += x * x * x;
        s4 += x * x * x * x;
    }
    const auto full = detail::central_from_power_sums(static_cast<double>(n), s1, s2, s3, s4);
    if (!(full.v > 0.0)) throw DomainError("moment_summary: degenerate batch (zero variance)");
    MomentSummary out;
    out.n = n;
    out.mean = full.m;
    out.variance = full.v * n / (n - 1.0);
    out.skewness = full.sk;
    out.excess_kurtosis = full.ku;
    // delete-1 jackknife
    double jm = 0.0, jv = 0.0, jsk = 0.0, jku = 0.0;
    std::vector<detail::CentralMoments> loo(n);
    for (long i = 0; i < n; ++i) {
        const double x = samples[i];
        loo[i] = detail::central_from_power_sums(static_cast<double>(n - 1), s1 - x,
                                                 s2 - x * x, s3 - x * x * x,
                                                 s4 - x * x * x * x);
        jm += loo[i].m;
        jv += loo[i].v;
        jsk += loo[i].sk;
        jku += loo[i].ku;
    }
    jm /= n;
    jv /= n;
    jsk /= n;
    jku /= n;
    double qm = 0.0, qv = 0.0, qsk = 0.0, qku = 0.0;
    for (long i = 0; i < n; ++i) {
        qm += (loo[i].m - jm) * (loo[i].m - jm);
        qv += (loo[i].v - jv) * (loo[i].v - jv);
        qsk += (loo[i].sk - jsk) * (loo[i].sk - jsk);
        qku += (loo[i].ku - jku) * (loo[i].ku - jku);
    }
    const double factor = (n - 1.0) / n;
    out.se_mean = std::sqrt(factor * qm);
    out.se_variance = std::sqrt(factor * qv);
    out.se_skewness = std::sqrt(factor * qsk);
    out.se_kurtosis = std::sqrt(factor * qku);
    return out;
}

} // namespace ssk
