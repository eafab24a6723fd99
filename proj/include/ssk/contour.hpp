#pragma once

// Vertical-line and double contour quadrature for the partition function and
// the overlap Laplace transform.
//
// All exponentials are carried relative to G(gamma) (and 2 G(gamma) for the
// double integral); only centered quantities are exponentiated, so N G ~
// thousands never overflows. Truncation is certified by an explicit modulus
// bound; panels are geometric from the central Gaussian scale
// (N G''(gamma))^{-1/2}, capped so the e^{i N beta s} oscillation stays
// resolved.

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssk/gibbs.hpp"
#include "ssk/numeric.hpp"
#include "ssk/potential.hpp"

namespace ssk {

// m * e^{i theta} without overflow; multiplication adds fields.
struct LogScaledComplex {
    double log_magnitude = 0.0;
    double phase = 0.0; // in (-pi, pi]

    static double wrap(double th) {
        while (th > std::numbers::pi) th -= 2.0 * std::numbers::pi;
        while (th <= -std::numbers::pi) th += 2.0 * std::numbers::pi;
        return th;
    }
    LogScaledComplex times(const LogScaledComplex& o) const {
        return {log_magnitude + o.log_magnitude, wrap(phase + o.phase)};
    }
    Complex value() const { return std::exp(Complex(log_magnitude, 0.0)) * std::exp(Complex(0.0, phase)); }
};

struct ContourSpec {
    double gamma = 0.0;      // anchor (Re of the line); >= saddle, respects t-margin
    double g_at_gamma = 0.0; // G(gamma), for centering
    double truncation = 0.0; // S
    std::vector<double> edges; // panel breakpoints on [0, S]
    int nodes = 24;          // Gauss-Legendre nodes per panel
    double tail_bound = 0.0; // certified relative modulus tail beyond S
    double t_margin = 0.0;   // the |t| the anchor margin was planned for
    double tol = 1e-9;
};

namespace detail {

// Certified relative tail of the centered single-line modulus
//   prod_i (1 + s^2/a_i^2)^{-1/4}
// beyond S, per unit of the central scale iscale. Uses the log-convexity
// bound modulus(s) <= B(S) (s/S)^{-q(S)}.
inline double line_tail_bound(const std::vector<double>& gaps, double S, double power) {
    double logB = 0.0, q = 0.0;
    for (double a : gaps) {
        const double r = (S / a) * (S / a);
        logB -= power * std::log1p(r);
        q += 2.0 * power * r / (1.0 + r);
    }
    if (q <= 1.25) return std::numeric_limits<double>::infinity();
    return std::exp(logB) * S / (q - 1.0);
}

// Full-line integral bound of prod (1 + s^2/a_i^2)^{-power}: 2 * (amax *
// sqrt(pi) Gamma(n power - 1/2)/Gamma(n power)) using a_i <= amax, valid for
// n * power > 1/2; loose but certified.
inline double line_full_bound(const std::vector<double>& gaps, double power) {
    const double amax = *std::max_element(gaps.begin(), gaps.end());
    const double np = power * static_cast<double>(gaps.size());
    if (np <= 0.75) return std::numeric_limits<double>::infinity();
    const double lg = std::lgamma(np - 0.5) - std::lgamma(np);
    return 2.0 * amax * std::sqrt(std::numbers::pi) * std::exp(lg) * 0.5;
}

} // namespace detail

// Plan the contour for the potential p and Laplace parameter t (the
// effective, unnormalized t entering G~). Certifies truncation for both the
// single line (modulus power 1/4) and the tensor-product double integral
// (power 1/8 per axis plus the coupling constant).
inline ContourSpec plan_contour(const LogPotential& p, const SaddleInfo& saddle, double t,
                                double tol) {
    const int n = p.n();
    if (n < 5)
        throw DomainError(
            "plan_contour: unsupported dimension (N >= 5 required for an integrable tail; "
            "use the small-N angular quadrature oracle instead)");
    if (!(tol > 0.0)) throw DomainError("plan_contour: tolerance must be positive");

    const double c = std::abs(t) / (2.0 * p.beta * n);
    // anchor: saddle, pushed right if the branch margin demands it
    double gamma = saddle.gamma;
    if (gamma - p.top() < 1.5 * c) gamma = p.top() + 1.5 * c;

    std::vector<double> gaps(p.spec->lambda.size());
    for (std::size_t i = 0; i < gaps.size(); ++i) gaps[i] = gamma - p.spec->lambda[i];

    const double d2 = G_derivative(p, Complex(gamma, 0.0), 2).real();
    if (!(d2 > 0.0)) throw NumericError("plan_contour: G'' at the anchor not positive");
    const double w0 = 1.0 / std::sqrt(n * d2);
    const double iscale = std::sqrt(4.0 * std::numbers::pi / (n * d2));

    // coupling constant for the double-integral modulus: prod (1 - c^2/a^2)^{-1/2}
    double log_ct = 0.0;
    double xi_max = 0.0;
    for (double a : gaps) {
        const double xi = (c / a) * (c / a);
        xi_max = std::max(xi_max, xi);
        if (xi < 1.0) log_ct -= 0.5 * std::log1p(-xi);
    }
    if (xi_max >= 1.0)
        throw NumericError("plan_contour: branch margin violated (|t|/(2 beta N) >= gap)");
    const double ct = std::exp(log_ct);

    double S = std::max(8.0 * w0, 1.0);
    const double full8 = detail::line_full_bound(gaps, 0.125);
    for (int it = 0;; ++it) {
        const double tail4 = detail::line_tail_bound(gaps, S, 0.25);       // single line
        const double tail8 = detail::line_tail_bound(gaps, S, 0.125);      // double, one axis
        const double rel1 = tail4 / iscale;
        const double rel2 = 2.0 * ct * ct * tail8 * full8 / (iscale * iscale);
        if (std::max(rel1, rel2) < tol) break;
        S *= 1.5;
        if (it > 4000 || !std::isfinite(S))
            throw NumericError("plan_contour: could not certify a truncation point");
    }

    ContourSpec spec;
    spec.gamma = gamma;
    spec.g_at_gamma = G_value(p, Complex(gamma, 0.0)).real();
    spec.truncation = S;
    spec.nodes = 24;
    spec.t_margin = std::abs(t);
    spec.tol = tol;
    spec.tail_bound = std::max(detail::line_tail_bound(gaps, S, 0.25) / iscale,
                               2.0 * ct * ct * detail::line_tail_bound(gaps, S, 0.125) *
                                   full8 / (iscale * iscale));

    // panels: geometric from w0, capped at ~4 oscillation wavelengths of
    // e^{i N beta s} so Gauss-Legendre stays accurate in the far field
    const double osc_cap = 8.0 * std::numbers::pi / (n * p.beta);
    spec.edges.push_back(0.0);
    double w = std::min(w0, S);
    spec.edges.push_back(w);
    while (spec.edges.back() < S) {
        w = std::min(w * 2.0, osc_cap);
        spec.edges.push_back(std::min(spec.edges.back() + w, S));
        if (spec.edges.size() > 3'000'000)
            throw NumericError("plan_contour: panel budget exceeded");
    }
    return spec;
}

inline ContourSpec plan_contour(const LogPotential& p, double t, double tol) {
    return plan_contour(p, find_saddle(p), t, tol);
}

namespace detail {

// Node tables along the upper half of the contour line.
struct LineTables {
    std::vector<double> s;       // node ordinates > 0
    std::vector<double> w;       // quadrature weights
    std::vector<Complex> pre;    // e^{(N/2)(G(gamma+is) - G(gamma))}
    std::vector<int> panel;      // owning panel per node
    int panels = 0;
    double coarse_value = 0.0;   // half-rule line integral (error estimate)
};

inline Complex centered_G(const LogPotential& p, double gamma, double g_at_gamma, double s) {
    // G(gamma+is) - G(gamma) via per-factor principal logs (Kahan-chunked)
    const auto& lam = p.spec->lambda;
    const Complex z(gamma, s);
    const Complex logsum =
        chunked_sum<Complex>(lam.size(), [&](std::size_t i) { return std::log(z - lam[i]); });
    return 2.0 * p.beta * z - logsum / static_cast<double>(p.n()) - g_at_gamma;
}

inline LineTables build_line(const LogPotential& p, const ContourSpec& spec) {
    LineTables t;
    const QuadratureRule rule = gauss_legendre(spec.nodes);
    const QuadratureRule half = gauss_legendre(spec.nodes / 2);
    const double nh = 0.5 * p.n();
    std::vector<double> xs, ws;
    KahanSum<double> coarse;
    t.panels = static_cast<int>(spec.edges.size()) - 1;
    for (int pa = 0; pa < t.panels; ++pa) {
        map_panel(rule, spec.edges[pa], spec.edges[pa + 1], xs, ws);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            t.s.push_back(xs[i]);
            t.w.push_back(ws[i]);
            t.pre.push_back(std::exp(nh * centered_G(p, spec.gamma, spec.g_at_gamma, xs[i])));
            t.panel.push_back(pa);
        }
        map_panel(half, spec.edges[pa], spec.edges[pa + 1], xs, ws);
        for (std::size_t i = 0; i < xs.size(); ++i)
            coarse.add(2.0 * ws[i] *
                       std::exp(nh * centered_G(p, spec.gamma, spec.g_at_gamma, xs[i])).real());
    }
    t.coarse_value = coarse.value();
    return t;
}

inline double line_integral(const LineTables& t) {
    KahanSum<double> sum;
    for (std::size_t i = 0; i < t.s.size(); ++i) sum.add(2.0 * t.w[i] * t.pre[i].real());
    return sum.value();
}

} // namespace detail

struct QuadratureValue {
    double value = 0.0;
    double error_estimate = 0.0;
};

// Centered line integral: integral over the truncated contour of
// e^{(N/2)(G(z)-G(gamma))} dz carries a factor i; the returned
// LogScaledComplex has phase pi/2 and log-magnitude log of
// 2 int_0^S Re e^{(N/2)(G(gamma+is)-G(gamma))} ds.
inline LogScaledComplex partition_integral(const LogPotential& p, const ContourSpec& spec,
                                           QuadratureValue* diagnostics = nullptr) {
    const detail::LineTables t = detail::build_line(p, spec);
    const double value = detail::line_integral(t);
    const double err = std::abs(value - t.coarse_value) + spec.tail_bound * std::abs(value);
    if (diagnostics) {
        diagnostics->value = value;
        diagnostics->error_estimate = err;
    }
    if (!(value > 0.0))
        throw NumericError("partition_integral: line integral lost positivity");
    if (err > std::max(spec.tol * 32.0, 1e-13) * value)
        throw NumericError("partition_integral: quadrature did not converge at the planned "
                           "layout; increase nodes per panel or loosen tol");
    return {std::log(value), std::numbers::pi / 2.0};
}

// Steepest-descent approximation i sqrt(4 pi / (N G''(gamma))).
inline LogScaledComplex saddle_denominator_approx(const SaddleInfo& saddle, int n) {
    if (!(saddle.d2 > 0.0)) throw DomainError("saddle_denominator_approx: G'' must be positive");
    return {0.5 * std::log(4.0 * std::numbers::pi / (n * saddle.d2)), std::numbers::pi / 2.0};
}

// log Z_N(beta) with the representation prefactors restored:
//   log Gamma(N/2) - (N/2-1) log(N beta) + (N/2) G(gamma) + log(|line|/(2 pi))
inline double log_partition_function(const LogPotential& p, const ContourSpec& spec) {
    const LogScaledComplex line = partition_integral(p, spec);
    const double n = static_cast<double>(p.n());
    return std::lgamma(0.5 * n) - (0.5 * n - 1.0) * std::log(n * p.beta) +
           0.5 * n * spec.g_at_gamma + line.log_magnitude - std::log(2.0 * std::numbers::pi);
}

inline double log_partition_function(const LogPotential& p, double tol = 1e-9) {
    return log_partition_function(p, plan_contour(p, 0.0, tol));
}

// ---------------------------------------------------------------------------
// Overlap Laplace transform
// ---------------------------------------------------------------------------

enum class MgfMethod { Contour, SaddleApprox, MonteCarlo, Oracle };

inline const char* to_string(MgfMethod m) {
    switch (m) {
        case MgfMethod::Contour: return "contour";
        case MgfMethod::SaddleApprox: return "saddle-approx";
        case MgfMethod::MonteCarlo: return "mc";
        case MgfMethod::Oracle: return "oracle";
    }
    return "?";
}

struct MgfCurve {
    std::vector<double> t_grid;
    std::vector<double> values;
    MgfMethod method = MgfMethod::Contour;
    bool normalized = false; // t pre-scaled by sqrt(N (1 - beta^2))
};

// Evaluator for the exact double-contour ratio. Node tables and the
// t-independent coupling moment matrices are built once per (spectrum,
// anchor), then every t on the grid reuses them.
class OverlapMgfEvaluator {
public:
    OverlapMgfEvaluator(const LogPotential& p, const ContourSpec& spec)
        : p_(p), spec_(spec), line_(detail::build_line(p, spec)) {
        i1_ = detail::line_integral(line_);
        if (!(i1_ > 0.0)) throw NumericError("overlap_mgf: line integral lost positivity");
        err1_rel_ = std::abs(i1_ - line_.coarse_value) / i1_ + spec.tail_bound;

        // kept nodes for the double sum
        double wp_total = 0.0;
        for (std::size_t j = 0; j < line_.s.size(); ++j)
            wp_total += line_.w[j] * std::abs(line_.pre[j]);
        double wp_kept = 0.0;
        for (std::size_t j = 0; j < line_.s.size(); ++j) {
            if (std::abs(line_.pre[j]) >= 1e-18 &&
                line_.w[j] * std::abs(line_.pre[j]) >= 1e-18 * wp_total) {
                kept_.push_back(static_cast<int>(j));
                wp_kept += line_.w[j] * std::abs(line_.pre[j]);
            }
        }
        skip_bound_ = wp_total * wp_total - wp_kept * wp_kept;

        const int nk = static_cast<int>(kept_.size());
        const auto& lam = p.spec->lambda;
        inv_.resize(nk, static_cast<int>(lam.size()));
        for (int a = 0; a < nk; ++a) {
            const Complex z(spec.gamma, line_.s[kept_[a]]);
            for (std::size_t i = 0; i < lam.size(); ++i) inv_(a, i) = 1.0 / (z - lam[i]);
        }
        gap_ = spec.gamma - p.top();
    }

    double anchor() const { return spec_.gamma; }
    double line_value() const { return i1_; }

    // <e^{t_eff R}>-style ratio for the effective (unnormalized) t.
    double evaluate(double t_eff, QuadratureValue* diagnostics = nullptr) const {
        const int n = p_.n();
        const double c = std::abs(t_eff) / (2.0 * p_.beta * n);
        if (!(gap_ > c))
            throw NumericError("overlap_mgf: branch margin violated for this t");
        const double c2 = c * c;
        const double xi_max = c2 / (gap_ * gap_);

        const int nk = static_cast<int>(kept_.size());
        const int order = order_for(xi_max);
        const bool use_series =
            n > 64 && order > 0 &&
            static_cast<std::size_t>(order) * nk * nk * 32 < (std::size_t{1} << 27);

        KahanSum<double> total;
        if (use_series) {
            ensure_moments(order);
            // coupling exponent: (1/2) sum_m (c^2)^m / m * P_m[j,k]
            Eigen::MatrixXcd expo_q = Eigen::MatrixXcd::Zero(nk, nk);
            Eigen::MatrixXcd expo_r = Eigen::MatrixXcd::Zero(nk, nk);
            double c2m = c2;
            for (int m = 1; m <= order; ++m, c2m *= c2) {
                const double coef = 0.5 * c2m / m;
                expo_q += coef * q_moments_[m - 1];
                expo_r += coef * r_moments_[m - 1];
            }
            for (int a = 0; a < nk; ++a) {
                const double wa = line_.w[kept_[a]];
                const Complex pa = line_.pre[kept_[a]];
                for (int b = 0; b < nk; ++b) {
                    const Complex same = pa * line_.pre[kept_[b]] * std::exp(expo_q(a, b));
                    const Complex cnj =
                        pa * std::conj(line_.pre[kept_[b]]) * std::exp(expo_r(a, b));
                    total.add(2.0 * wa * line_.w[kept_[b]] * (same.real() + cnj.real()));
                }
            }
        } else {
            // direct per-pair accumulation of the coupling logs
            const auto cols = inv_.cols();
            for (int a = 0; a < nk; ++a) {
                const double wa = line_.w[kept_[a]];
                const Complex pa = line_.pre[kept_[a]];
                for (int b = 0; b < nk; ++b) {
                    Complex lq(0.0, 0.0), lr(0.0, 0.0);
                    for (Eigen::Index i = 0; i < cols; ++i) {
                        const Complex ua = inv_(a, i);
                        const Complex ub = inv_(b, i);
                        lq += std::log(1.0 - c2 * ua * ub);
                        lr += std::log(1.0 - c2 * ua * std::conj(ub));
                    }
                    const Complex same = pa * line_.pre[kept_[b]] * std::exp(-0.5 * lq);
                    const Complex cnj =
                        pa * std::conj(line_.pre[kept_[b]]) * std::exp(-0.5 * lr);
                    total.add(2.0 * wa * line_.w[kept_[b]] * (same.real() + cnj.real()));
                }
            }
        }
        const double dd = total.value();
        const double value = dd / (i1_ * i1_);
        if (diagnostics) {
            diagnostics->value = value;
            const double ct2 = std::exp(-0.5 * n * std::log1p(-xi_max)); // coupling sup bound
            diagnostics->error_estimate =
                std::abs(value) * (2.0 * err1_rel_) +
                (skip_bound_ * ct2 + spec_.tail_bound * std::abs(dd)) / (i1_ * i1_);
        }
        return value;
    }

private:
    static int order_for(double xi) {
        if (xi >= 0.6) return -1; // series too slow; use the direct path
        const int m = static_cast<int>(std::ceil(std::log(1e-14) / std::log(std::max(xi, 1e-8))));
        return std::clamp(m, 2, 64);
    }

    void ensure_moments(int order) const {
        while (static_cast<int>(q_moments_.size()) < order) {
            upow_ = q_moments_.empty() ? inv_ : upow_.cwiseProduct(inv_).eval();
            q_moments_.push_back(upow_ * upow_.transpose());
            r_moments_.push_back(upow_ * upow_.adjoint());
        }
    }

    const LogPotential& p_;
    ContourSpec spec_;
    detail::LineTables line_;
    double i1_ = 0.0;
    double err1_rel_ = 0.0;
    double skip_bound_ = 0.0;
    double gap_ = 0.0;
    std::vector<int> kept_;
    Eigen::MatrixXcd inv_;
    mutable Eigen::MatrixXcd upow_;                   // elementwise U^m cache
    mutable std::vector<Eigen::MatrixXcd> q_moments_; // U^m U^m^T
    mutable std::vector<Eigen::MatrixXcd> r_moments_; // U^m U^m^H
};

// Exact overlap Laplace transform by the double-contour ratio.
// If normalized, t is pre-scaled by sqrt(N (1 - beta^2)). Dimensions 2 and 3
// route through the angular quadrature oracle on the defining integral;
// contour quadrature is certified for N >= 5 only.
inline double overlap_mgf_exact(const LogPotential& p, double t, double tol = 1e-9,
                                bool normalized = true) {
    const int n = p.n();
    const double t_eff =
        normalized ? t * std::sqrt(n * (1.0 - p.beta * p.beta)) : t;
    if (n < 5) {
        if (n == 2 || n == 3) {
            GibbsTarget tgt{p.beta, *p.spec};
            return oracle_mgf_small_n(tgt, t_eff, 512).value;
        }
        throw DomainError("overlap_mgf_exact: unsupported dimension (N=4 has no oracle and "
                          "no certified contour)");
    }
    const ContourSpec spec = plan_contour(p, t_eff, tol);
    OverlapMgfEvaluator eval(p, spec);
    QuadratureValue diag;
    const double v = eval.evaluate(t_eff, &diag);
    if (diag.error_estimate > std::max(tol * 64.0, 1e-12) * std::max(1.0, std::abs(v)))
        throw NumericError("overlap_mgf_exact: quadrature error above tolerance; refine nodes");
    return v;
}

enum class SaddleConstantMode { PaperTheorem, PaperPropSaddle, Rederived };

inline const char* to_string(SaddleConstantMode m) {
    switch (m) {
        case SaddleConstantMode::PaperTheorem: return "paper-theorem";
        case SaddleConstantMode::PaperPropSaddle: return "paper-prop-saddle";
        case SaddleConstantMode::Rederived: return "rederived";
    }
    return "?";
}

// Saddle-point closed form exp(kappa t^2 (1-beta^2) m_N'(gamma) / (4 beta^2))
// for normalized t, with the constant kappa depending on the mode
// (1, 2, or 1/2). m_N'(gamma) equals G''(gamma).
inline double overlap_mgf_saddle(const LogPotential& p, const SaddleInfo& saddle, double t,
                                 SaddleConstantMode mode) {
    double kappa = 1.0;
    if (mode == SaddleConstantMode::PaperPropSaddle) kappa = 2.0;
    if (mode == SaddleConstantMode::Rederived) kappa = 0.5;
    const double b2 = p.beta * p.beta;
    return std::exp(kappa * t * t * (1.0 - b2) * saddle.d2 / (4.0 * b2));
}

// Quenched marginal second moments q_i = <x_i^2> via the contour identity
//   q_i = [ int e^{(N/2)(G-G(gamma))} / (2 beta N (z - lambda_i)) dz ] / line.
inline std::vector<double> marginal_second_moments(const LogPotential& p,
                                                   const ContourSpec& spec) {
    const detail::LineTables t = detail::build_line(p, spec);
    const double i1 = detail::line_integral(t);
    if (!(i1 > 0.0)) throw NumericError("marginal_second_moments: line integral not positive");
    const auto& lam = p.spec->lambda;
    const int n = p.n();
    std::vector<KahanSum<double>> acc(lam.size());
    for (std::size_t j = 0; j < t.s.size(); ++j) {
        const Complex z(spec.gamma, t.s[j]);
        const Complex wp = t.w[j] * t.pre[j];
        for (std::size_t i = 0; i < lam.size(); ++i)
            acc[i].add(2.0 * (wp / (z - lam[i])).real());
    }
    std::vector<double> q(lam.size());
    for (std::size_t i = 0; i < lam.size(); ++i) {
        q[i] = acc[i].value() / (2.0 * p.beta * n * i1);
        if (!(q[i] > 0.0))
            throw NumericError("marginal_second_moments: non-positive marginal moment");
    }
    return q;
}

// Var of the normalized overlap: N (1 - beta^2) sum q_i^2.
inline double overlap_variance_exact(const LogPotential& p, const ContourSpec& spec) {
    const std::vector<double> q = marginal_second_moments(p, spec);
    const double s2 = chunked_sum<double>(q.size(), [&](std::size_t i) { return q[i] * q[i]; });
    const double v = p.n() * (1.0 - p.beta * p.beta) * s2;
    if (!(v > 0.0)) throw NumericError("overlap_variance_exact: non-positive variance");
    return v;
}

} // namespace ssk
