#pragma once

// The log-potential G(z) = 2 beta z - (1/N) sum log(z - lambda_i), the
// two-replica potential G~, their derivatives, and the saddle point gamma
// (unique root of G' above the top eigenvalue).
//
// Sign convention: G'(z) = 2 beta - (1/N) sum 1/(z - lambda_i), i.e. the
// direct derivative of G; the saddle solves -m_N(gamma) = 2 beta, matching
// gamma_hat as the root of -m_sc = 2 beta.

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "ssk/numeric.hpp"
#include "ssk/statkit.hpp"
#include "ssk/wigner.hpp"

namespace ssk {

// Inverse temperature schedule: fixed beta, or the critical window
// beta_N = 1 - c N^{-1/3 + tau}.
struct BetaSchedule {
    enum class Mode { Fixed, Window };
    Mode mode = Mode::Fixed;
    double beta = 0.5; // fixed mode
    double c = 1.0;    // window mode
    double tau = 0.2;  // window mode, in (0, 1/3)

    static BetaSchedule fixed(double beta) {
        if (!(beta > 0.0)) throw DomainError("BetaSchedule: beta must be positive");
        BetaSchedule s;
        s.mode = Mode::Fixed;
        s.beta = beta;
        return s;
    }
    static BetaSchedule window(double c, double tau) {
        if (!(c > 0.0)) throw DomainError("BetaSchedule: c must be positive");
        if (!(tau > 0.0 && tau < 1.0 / 3.0))
            throw DomainError("BetaSchedule: tau must lie in (0, 1/3)");
        BetaSchedule s;
        s.mode = Mode::Window;
        s.c = c;
        s.tau = tau;
        return s;
    }
    double beta_at(int n) const {
        if (mode == Mode::Fixed) return beta;
        const double b = 1.0 - c * std::pow(static_cast<double>(n), -1.0 / 3.0 + tau);
        if (!(b > 0.0 && b < 1.0))
            throw DomainError("BetaSchedule: window beta outside (0,1) at this N");
        return b;
    }
};

struct LogPotential {
    double beta = 0.0;
    const Spectrum* spec = nullptr;

    LogPotential(double beta_, const Spectrum& s) : beta(beta_), spec(&s) {
        if (!(beta > 0.0)) throw DomainError("LogPotential: beta must be positive");
        if (s.n < 1) throw DomainError("LogPotential: empty spectrum");
    }
    int n() const { return spec->n; }
    double top() const { return spec->lambda.front(); }
};

// G(z) for Re z > lambda_1 (each factor z - lambda_i then has positive real
// part, so per-factor principal logs are continuous).
inline Complex G_value(const LogPotential& p, Complex z) {
    if (!(z.real() > p.top())) throw DomainError("G_value: Re z must exceed lambda_1");
    const auto& lam = p.spec->lambda;
    const Complex logsum =
        chunked_sum<Complex>(lam.size(), [&](std::size_t i) { return std::log(z - lam[i]); });
    return 2.0 * p.beta * z - logsum / static_cast<double>(p.n());
}

// k-th derivative of G, k in 1..4, via closed-form spectral sums.
inline Complex G_derivative(const LogPotential& p, Complex z, int k) {
    if (k < 1 || k > 4) throw DomainError("G_derivative: order must be in 1..4");
    const auto& lam = p.spec->lambda;
    const double scale = std::max(1.0, std::abs(z));
    for (double l : lam)
        if (std::abs(z - l) <= std::numeric_limits<double>::epsilon() * scale)
            throw NumericError("G_derivative: z coincides with an eigenvalue");
    const Complex sum = chunked_sum<Complex>(lam.size(), [&](std::size_t i) {
        Complex inv = 1.0 / (z - lam[i]);
        Complex out = inv;
        for (int j = 1; j < k; ++j) out *= inv;
        return out;
    });
    const double coeff[5] = {0.0, -1.0, 1.0, -2.0, 6.0}; // (-1)^k (k-1)!
    Complex val = coeff[k] * sum / static_cast<double>(p.n());
    if (k == 1) val += 2.0 * p.beta;
    return val;
}

// gamma_hat = (beta + 1/beta)/2, the root of -m_sc = 2 beta.
inline double gamma_hat(double beta) {
    if (!(beta > 0.0)) throw DomainError("gamma_hat: beta must be positive");
    return 0.5 * (beta + 1.0 / beta);
}

struct SaddleInfo {
    double gamma = 0.0;     // unique root of G' in (lambda_1, inf)
    double gamma_hat = 0.0; // (beta + 1/beta)/2
    double gap = 0.0;       // gamma - lambda_1
    double g_at_gamma = 0.0;
    double d2 = 0.0; // G''(gamma) > 0
    double d3 = 0.0;
    double d4 = 0.0;
};

// Bisection on [lambda_1 + 1/(3 beta N), b] (b doubled until G' > 0), then
// Newton polish with analytic G''; stops at |G'(gamma)| <= tol * beta.
inline SaddleInfo find_saddle(const LogPotential& p, double tol = 1e-12) {
    const int n = p.n();
    const double l1 = p.top();
    const double beta = p.beta;
    const auto gprime = [&](double x) { return G_derivative(p, x, 1).real(); };

    double lo = l1 + 1.0 / (3.0 * beta * n);
    double hi = l1 + 1.0;
    double fhi = gprime(hi);
    int guard = 0;
    while (fhi <= 0.0) {
        hi = l1 + 2.0 * (hi - l1);
        fhi = gprime(hi);
        if (!std::isfinite(fhi) || ++guard > 200)
            throw NumericError("find_saddle: failed to bracket the root of G'");
    }
    if (!(gprime(lo) < 0.0))
        throw NumericError("find_saddle: lower bracket endpoint not negative");

    // bisect to relative width 1e-3 of the current gap estimate
    while (hi - lo > 1e-3 * (lo - l1)) {
        const double mid = 0.5 * (lo + hi);
        if (gprime(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    double g = 0.5 * (lo + hi);
    for (int it = 0; it < 100; ++it) {
        const double f = gprime(g);
        if (std::abs(f) <= tol * beta) break;
        const double d2 = G_derivative(p, g, 2).real();
        double next = g - f / d2;
        if (next <= l1) next = 0.5 * (g + l1); // keep inside the domain
        g = next;
    }
    if (std::abs(gprime(g)) > 1e3 * tol * beta)
        throw NumericError("find_saddle: Newton polish did not converge");

    SaddleInfo s;
    s.gamma = g;
    s.gamma_hat = 0.5 * (beta + 1.0 / beta);
    s.gap = g - l1;
    s.g_at_gamma = G_value(p, Complex(g, 0.0)).real();
    s.d2 = G_derivative(p, g, 2).real();
    s.d3 = G_derivative(p, g, 3).real();
    s.d4 = G_derivative(p, g, 4).real();
    if (!(s.d2 > 0.0)) throw NumericError("find_saddle: G'' at the saddle not positive");
    return s;
}

// Two-replica potential
//   G~(z,w,t) = 2 beta (z+w) - (1/N) sum log((z-l_i)(w-l_i) - t^2/(4 beta^2 N^2)).
// Requires Re z, Re w > lambda_1 + |t|/(2 beta N): every factor then has
// positive real part whenever its imaginary part vanishes, so per-factor
// principal logs are safe.
inline Complex Gtilde_value(const LogPotential& p, Complex z, Complex w, double t) {
    const int n = p.n();
    const double margin = p.top() + std::abs(t) / (2.0 * p.beta * n);
    if (!(z.real() > margin && w.real() > margin))
        throw DomainError("Gtilde_value: Re z, Re w must exceed lambda_1 + |t|/(2 beta N)");
    const double c2 = t * t / (4.0 * p.beta * p.beta * n * n);
    const auto& lam = p.spec->lambda;
    const Complex logsum = chunked_sum<Complex>(lam.size(), [&](std::size_t i) {
        const Complex factor = (z - lam[i]) * (w - lam[i]) - c2;
        if (factor.imag() == 0.0 && factor.real() <= 0.0)
            throw NumericError("Gtilde_value: factor crossed the branch cut");
        return std::log(factor);
    });
    return 2.0 * p.beta * (z + w) - logsum / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct GapScalingRow {
    int n = 0;
    std::uint64_t seed = 0;
    double beta = 0.0;
    double gap = 0.0;
};

struct GapScalingReport {
    std::vector<GapScalingRow> rows;
    std::vector<int> n_list;
    std::vector<double> median_gap;
    SlopeFit fit; // log median gap vs log N
};

inline GapScalingReport gap_scaling_statistic(const BetaSchedule& schedule,
                                              const std::vector<int>& n_list, int seeds,
                                              std::uint64_t master_seed,
                                              SpectrumMethod method = SpectrumMethod::Tridiagonal) {
    GapScalingReport rep;
    rep.n_list = n_list;
    for (int n : n_list) {
        const double beta = schedule.beta_at(n);
        std::vector<double> gaps;
        gaps.reserve(seeds);
        for (int s = 0; s < seeds; ++s) {
            const std::uint64_t seed = master_seed + static_cast<std::uint64_t>(s);
            const Spectrum spec = sample_spectrum(n, seed, method);
            LogPotential p(beta, spec);
            const SaddleInfo info = find_saddle(p);
            rep.rows.push_back({n, seed, beta, info.gap});
            gaps.push_back(info.gap);
        }
        std::sort(gaps.begin(), gaps.end());
        rep.median_gap.push_back(gaps[gaps.size() / 2]);
    }
    if (n_list.size() >= 3) {
        std::vector<double> xs(n_list.begin(), n_list.end());
        rep.fit = loglog_slope(xs, rep.median_gap);
    }
    return rep;
}

struct DerivativeBoundRow {
    double s = 0.0;
    double magnitude = 0.0;
    double bound = 0.0;
    double ratio = 0.0;
};

struct DerivativeBoundReport {
    int k = 0;
    double max_ratio = 0.0;
    std::vector<DerivativeBoundRow> rows;
};

// |G^(k)(gamma + i s)| against N^{2k/3 - (2k-3) tau - 1 + eps'} for k >= 2,
// and against N^{eps'} (constant 1) for k = 1.
inline DerivativeBoundReport derivative_bound_check(const LogPotential& p,
                                                    const SaddleInfo& saddle,
                                                    const std::vector<double>& s_grid, int k,
                                                    double tau, double eps_prime = 0.1) {
    if (k < 1 || k > 4) throw DomainError("derivative_bound_check: k must be in 1..4");
    const double n = static_cast<double>(p.n());
    const double bound = (k == 1)
                             ? std::pow(n, eps_prime)
                             : std::pow(n, 2.0 * k / 3.0 - (2.0 * k - 3.0) * tau - 1.0 + eps_prime);
    DerivativeBoundReport rep;
    rep.k = k;
    rep.rows.reserve(s_grid.size());
    for (double s : s_grid) {
        const double mag = std::abs(G_derivative(p, Complex(saddle.gamma, s), k));
        DerivativeBoundRow row{s, mag, bound, mag / bound};
        rep.max_ratio = std::max(rep.max_ratio, row.ratio);
        rep.rows.push_back(row);
    }
    return rep;
}

} // namespace ssk
