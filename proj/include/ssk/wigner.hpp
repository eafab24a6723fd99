#pragma once

// Disorder sampling, spectra, semicircle analytics, and random-matrix
// diagnostics (typical locations, rigidity, interval counts, local laws).
//
// Normalization: eigenvalue support converges to [-1, 1] (edge-1
// convention), i.e. off-diagonal variance 1/(4n) and diagonal 1/(2n).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssk/errors.hpp"
#include "ssk/numeric.hpp"
#include "ssk/rng.hpp"

namespace ssk {

using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

// Raw i.i.d. standard Gaussian couplings g_ij, reproducible from (n, seed).
struct CouplingMatrix {
    int n = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd entries; // n x n, row-major draw order g(i,j) = draw(i*n+j)
};

// Symmetric disorder matrix under the edge-1 convention.
struct WignerMatrix {
    int n = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd entries; // exactly symmetric
};

enum class SpectrumMethod { Full, Tridiagonal, External };

inline const char* to_string(SpectrumMethod m) {
    switch (m) {
        case SpectrumMethod::Full: return "full";
        case SpectrumMethod::Tridiagonal: return "tridiagonal";
        case SpectrumMethod::External: return "external";
    }
    return "?";
}

// Eigenvalues sorted descending: lambda[0] >= lambda[1] >= ...
struct Spectrum {
    int n = 0;
    std::uint64_t seed = 0;
    SpectrumMethod method = SpectrumMethod::External;
    std::vector<double> lambda;

    double top() const { return lambda.front(); }

    void validate() const {
        if (n < 1 || static_cast<int>(lambda.size()) != n)
            throw DomainError("Spectrum: inconsistent dimension");
        for (int i = 0; i < n; ++i) {
            if (!std::isfinite(lambda[i])) throw DomainError("Spectrum: non-finite eigenvalue");
            if (i > 0 && lambda[i] > lambda[i - 1])
                throw DomainError("Spectrum: not sorted descending");
        }
    }
};

struct TypicalLocations {
    int n = 0;
    std::vector<double> gamma; // descending, in (-1, 1)
};

// ---------------------------------------------------------------------------
// Sampling and eigensolves
// ---------------------------------------------------------------------------

inline CouplingMatrix sample_disorder(int n, std::uint64_t seed) {
    if (n < 1) throw DomainError("sample_disorder: dimension must be >= 1");
    CouplingMatrix g;
    g.n = n;
    g.seed = seed;
    g.entries.resize(n, n);
    Philox rng(seed, StreamPurpose::Disorder, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g.entries(i, j) = rng.normal();
    return g;
}

// M_ij = (g_ij + g_ji) / (2 sqrt(2n)); exactly symmetric.
inline WignerMatrix symmetrize(const CouplingMatrix& g) {
    if (g.n < 1) throw DomainError("symmetrize: invalid coupling matrix");
    WignerMatrix m;
    m.n = g.n;
    m.seed = g.seed;
    const double scale = 1.0 / (2.0 * std::sqrt(2.0 * g.n));
    m.entries = (g.entries + g.entries.transpose()) * scale;
    return m;
}

inline Spectrum spectrum(const WignerMatrix& m) {
    if (m.n < 1) throw DomainError("spectrum: invalid matrix");
    if (m.entries != m.entries.transpose()) throw DomainError("spectrum: matrix not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.compute(m.entries, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw NumericError("spectrum: eigensolver failed to converge (seed " +
                           std::to_string(m.seed) + ")");
    Spectrum s;
    s.n = m.n;
    s.seed = m.seed;
    s.method = SpectrumMethod::Full;
    s.lambda.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + m.n);
    std::sort(s.lambda.begin(), s.lambda.end(), std::greater<double>());
    return s;
}

// Tridiagonal ensemble route: same eigenvalue law as the full symmetrize +
// eigensolve path at O(n^2) cost. Diagonal N(0,1), off-diagonal chi_{n-k},
// all divided by sqrt(2n).
inline Spectrum sample_spectrum_tridiagonal(int n, std::uint64_t seed) {
    if (n < 1) throw DomainError("sample_spectrum_tridiagonal: dimension must be >= 1");
    Philox rng(seed, StreamPurpose::Tridiagonal, 0);
    Eigen::VectorXd diag(n), sub(std::max(0, n - 1));
    for (int i = 0; i < n; ++i) diag[i] = rng.normal();
    for (int k = 1; k < n; ++k) sub[k - 1] = rng.chi(static_cast<double>(n - k)) / std::sqrt(2.0);
    const double scale = 1.0 / std::sqrt(2.0 * n);
    diag *= scale;
    sub *= scale;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw NumericError("sample_spectrum_tridiagonal: eigensolver failed (seed " +
                           std::to_string(seed) + ")");
    Spectrum s;
    s.n = n;
    s.seed = seed;
    s.method = SpectrumMethod::Tridiagonal;
    s.lambda.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
    std::sort(s.lambda.begin(), s.lambda.end(), std::greater<double>());
    return s;
}

inline Spectrum sample_spectrum(int n, std::uint64_t seed, SpectrumMethod method) {
    switch (method) {
        case SpectrumMethod::Full: return spectrum(symmetrize(sample_disorder(n, seed)));
        case SpectrumMethod::Tridiagonal: return sample_spectrum_tridiagonal(n, seed);
        case SpectrumMethod::External:
            throw ConfigError("sample_spectrum: external spectra must be loaded from file");
    }
    throw ConfigError("sample_spectrum: unknown method");
}

// ---------------------------------------------------------------------------
// Semicircle analytics
// ---------------------------------------------------------------------------

// density (2/pi) sqrt(1-x^2) on [-1,1]
inline double rho_sc(double x) {
    if (std::abs(x) >= 1.0) return 0.0;
    return (2.0 / std::numbers::pi) * std::sqrt(1.0 - x * x);
}

// closed-form tail mass: integral_g^1 rho_sc = (1/pi)(pi/2 - g sqrt(1-g^2) - asin g)
inline double rho_sc_tail(double g) {
    if (g <= -1.0) return 1.0;
    if (g >= 1.0) return 0.0;
    return (std::numbers::pi / 2.0 - g * std::sqrt(1.0 - g * g) - std::asin(g)) /
           std::numbers::pi;
}

// Stieltjes transform of rho_sc; decaying branch off the cut [-1,1].
// Implemented as 2(-z + z sqrt(1 - 1/z^2)) with the principal square root.
inline Complex m_sc(Complex z) {
    if (z.imag() == 0.0 && std::abs(z.real()) <= 1.0)
        throw DomainError("m_sc: z on the branch cut [-1,1]");
    return 2.0 * (-z + z * std::sqrt(1.0 - 1.0 / (z * z)));
}

// m_sc'(x) = -2 + 2x/sqrt(x^2-1) for real x outside [-1,1]
inline double m_sc_prime(double x) {
    if (std::abs(x) <= 1.0) throw DomainError("m_sc_prime: x on the branch cut");
    return -2.0 + 2.0 * x / std::sqrt(x * x - 1.0);
}

// Empirical Stieltjes transform and derivatives:
//   order 0: (1/N) sum 1/(lambda_i - z);  order k: (k!/N) sum (lambda_i - z)^{-k-1}
inline Complex m_N(Complex z, const Spectrum& s, int order = 0) {
    if (order < 0 || order > 2) throw DomainError("m_N: order must be 0, 1 or 2");
    const double scale = std::max(1.0, std::abs(z));
    for (double l : s.lambda)
        if (std::abs(z - l) <= std::numeric_limits<double>::epsilon() * scale)
            throw NumericError("m_N: z coincides with an eigenvalue");
    const double fact = (order == 0) ? 1.0 : (order == 1 ? 1.0 : 2.0);
    const Complex sum = chunked_sum<Complex>(s.lambda.size(), [&](std::size_t i) {
        const Complex d = s.lambda[i] - z;
        Complex p = 1.0 / d;
        for (int k = 0; k < order; ++k) p /= d;
        return p;
    });
    return fact * sum / static_cast<double>(s.n);
}

// ---------------------------------------------------------------------------
// Typical locations and diagnostics
// ---------------------------------------------------------------------------

// gamma_i solves N * integral_{gamma_i}^1 rho_sc = i - 1/2
inline TypicalLocations typical_locations(int n) {
    if (n < 1) throw DomainError("typical_locations: n >= 1 required");
    TypicalLocations t;
    t.n = n;
    t.gamma.resize(n);
    for (int i = 1; i <= n; ++i) {
        const double target = (i - 0.5) / n;
        // rho_sc_tail decreases from 1 to 0; root of tail - target
        const double g = bisect_root(
            [&](double x) { return target - rho_sc_tail(x); }, -1.0, 1.0, 1e-15);
        t.gamma[i - 1] = g;
    }
    return t;
}

struct RigidityReport {
    double statistic = 0.0;          // max_i |lambda_i - gamma_i| N^{2/3} (i ^ (N+1-i))^{1/3}
    std::vector<double> per_index;   // the i-th term
};

inline RigidityReport rigidity_report(const Spectrum& s, const TypicalLocations& t) {
    if (t.n != s.n) throw DomainError("rigidity_report: dimension mismatch");
    RigidityReport r;
    r.per_index.resize(s.n);
    const double n23 = std::pow(static_cast<double>(s.n), 2.0 / 3.0);
    for (int i = 1; i <= s.n; ++i) {
        const double w = std::cbrt(static_cast<double>(std::min(i, s.n + 1 - i)));
        r.per_index[i - 1] = std::abs(s.lambda[i - 1] - t.gamma[i - 1]) * n23 * w;
        r.statistic = std::max(r.statistic, r.per_index[i - 1]);
    }
    return r;
}

inline RigidityReport rigidity_report(const Spectrum& s) {
    return rigidity_report(s, typical_locations(s.n));
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0; // may be +-infinity
};

struct IntervalCountReport {
    double max_residual = 0.0;
    std::vector<double> residuals;
};

// |#{i: lambda_i in [lo, hi)}/N - integral_I rho_sc| per interval
inline IntervalCountReport interval_count_residual(const Spectrum& s,
                                                   const std::vector<Interval>& intervals) {
    IntervalCountReport rep;
    rep.residuals.reserve(intervals.size());
    for (const auto& iv : intervals) {
        if (std::isnan(iv.lo) || std::isnan(iv.hi) || iv.hi < iv.lo)
            throw DomainError("interval_count_residual: invalid interval");
        int count = 0;
        for (double l : s.lambda)
            if (l >= iv.lo && l < iv.hi) ++count;
        const double mass = rho_sc_tail(iv.lo) - rho_sc_tail(iv.hi);
        const double res = std::abs(static_cast<double>(count) / s.n - mass);
        rep.residuals.push_back(res);
        rep.max_residual = std::max(rep.max_residual, res);
    }
    return rep;
}

// Standard dyadic partitions of [-1,1], levels 0..max_level.
inline std::vector<Interval> dyadic_intervals(int max_level) {
    std::vector<Interval> out;
    for (int m = 0; m <= max_level; ++m) {
        const int segs = 1 << m;
        for (int k = 0; k < segs; ++k) {
            Interval iv;
            iv.lo = -1.0 + 2.0 * k / segs;
            iv.hi = -1.0 + 2.0 * (k + 1) / segs;
            if (k + 1 == segs) iv.hi = std::nextafter(1.0, 2.0); // include the edge
            out.push_back(iv);
        }
    }
    return out;
}

enum class LocalLawMode { Inside, Outside };

struct LocalLawReport {
    double max_ratio = 0.0;
    double median_ratio = 0.0;
    double q90_ratio = 0.0;
    std::vector<double> ratios; // per grid point
};

// Ratio |m_N - m_sc| / bound(z) over a grid.
//   inside:  bound = N^eps / (N eta)      on  |E| <= 1/delta, N^{-1+delta} <= eta <= 1/delta
//   outside: bound = N^{delta-1} / ((kappa+eta) + (kappa+eta)^2),  |E| >= 1 + N^{-2/3+eps}
inline LocalLawReport local_law_residual(const Spectrum& s, const std::vector<Complex>& grid,
                                         LocalLawMode mode, double eps = 0.1,
                                         double delta = 0.1) {
    LocalLawReport rep;
    const double n = static_cast<double>(s.n);
    rep.ratios.reserve(grid.size());
    for (const Complex& z : grid) {
        const double E = z.real();
        const double eta = z.imag();
        double bound = 0.0;
        if (mode == LocalLawMode::Inside) {
            if (std::abs(E) > 1.0 / delta || eta < std::pow(n, -1.0 + delta) * (1.0 - 1e-12) ||
                eta > 1.0 / delta)
                throw DomainError("local_law_residual: grid point outside inside-mode domain");
            bound = std::pow(n, eps) / (n * eta);
        } else {
            const double kappa = std::abs(std::abs(E) - 1.0);
            if (std::abs(E) < 1.0 + std::pow(n, -2.0 / 3.0 + eps) * (1.0 - 1e-12) || eta <= 0.0)
                throw DomainError("local_law_residual: grid point outside outside-mode domain");
            const double ke = kappa + eta;
            bound = std::pow(n, delta - 1.0) / (ke + ke * ke);
        }
        const double ratio = std::abs(m_N(z, s) - m_sc(z)) / bound;
        rep.ratios.push_back(ratio);
        rep.max_ratio = std::max(rep.max_ratio, ratio);
    }
    std::vector<double> sorted = rep.ratios;
    std::sort(sorted.begin(), sorted.end());
    if (!sorted.empty()) {
        rep.median_ratio = sorted[sorted.size() / 2];
        rep.q90_ratio = sorted[static_cast<std::size_t>(0.9 * (sorted.size() - 1))];
    }
    return rep;
}

} // namespace ssk
