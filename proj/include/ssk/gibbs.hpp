#pragma once

// Sampling from the spherical Gibbs measure in the eigenbasis: density
// proportional to exp(beta N sum lambda_i x_i^2) on the unit sphere. The
// exact rejection sampler (angular-central-Gaussian envelope) is the
// default; Metropolis exists to cross-validate it. Plus brute-force angular
// quadrature oracles for N = 2, 3.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssk/numeric.hpp"
#include "ssk/rng.hpp"
#include "ssk/statkit.hpp"
#include "ssk/wigner.hpp"

namespace ssk {

struct GibbsTarget {
    double beta = 0.0;
    const Spectrum* spec = nullptr;

    GibbsTarget(double beta_, const Spectrum& s) : beta(beta_), spec(&s) {
        if (!(beta >= 0.0)) throw DomainError("GibbsTarget: beta must be non-negative");
        if (s.n < 1) throw DomainError("GibbsTarget: empty spectrum");
    }
    int n() const { return spec->n; }

    // energy <x, Lambda x> = sum lambda_i x_i^2
    double energy(const double* x) const {
        const auto& lam = spec->lambda;
        return chunked_sum<double>(lam.size(),
                                   [&](std::size_t i) { return lam[i] * x[i] * x[i]; });
    }
};

struct BinghamDiagnostics {
    double b = 0.0;               // envelope parameter
    long proposals = 0;
    long accepted = 0;
    double acceptance_rate() const {
        return proposals > 0 ? static_cast<double>(accepted) / proposals : 0.0;
    }
};

namespace detail {

// Solve sum_i 1/(b - 2 a'_i) = 1 on (0, N] for shifted coefficients
// a'_i <= 0. The left side is strictly decreasing in b, diverges as b -> 0+,
// and is <= 1 at b = N.
inline double bingham_envelope_parameter(const std::vector<double>& a_shifted) {
    const double n = static_cast<double>(a_shifted.size());
    const auto f = [&](double b) {
        double s = 0.0;
        for (double ap : a_shifted) s += 1.0 / (b - 2.0 * ap);
        return s - 1.0;
    };
    double lo = 1e-300, hi = n;
    const double fhi = f(hi);
    if (fhi > 1e-12) throw NumericError("bingham: envelope equation has no root in (0, N]");
    if (fhi >= 0.0) return hi; // degenerate target: all a' = 0
    // f(lo) > 0 guaranteed by the 1/b divergence; bisect the decreasing f
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

// Exact i.i.d. draws from the Gibbs target; rows of the result are unit
// vectors. Acceptance test (with a'_i = beta N (lambda_i - lambda_1) and
// v = sum a'_i x_i^2):
//   log u <= v - (b-N)/2 + (N/2) log((1 - 2v/b) b / N),
// the exact density/envelope ratio relative to its supremum at v = (b-N)/2.
inline Eigen::MatrixXd sample_bingham_exact(const GibbsTarget& tgt, Philox& rng, int count,
                                            BinghamDiagnostics* diag = nullptr) {
    if (count < 1) throw DomainError("sample_bingham_exact: count must be >= 1");
    const int n = tgt.n();
    const auto& lam = tgt.spec->lambda;
    std::vector<double> a_shifted(n);
    for (int i = 0; i < n; ++i) a_shifted[i] = tgt.beta * n * (lam[i] - lam[0]);
    const double b = detail::bingham_envelope_parameter(a_shifted);
    std::vector<double> inv_sqrt_omega(n);
    for (int i = 0; i < n; ++i)
        inv_sqrt_omega[i] = 1.0 / std::sqrt(1.0 - 2.0 * a_shifted[i] / b);

    Eigen::MatrixXd out(count, n);
    std::vector<double> x(n);
    long proposals = 0, accepted = 0;
    long window_start = 0;
    for (int k = 0; k < count;) {
        ++proposals;
        double norm2 = 0.0;
        for (int i = 0; i < n; ++i) {
            x[i] = rng.normal() * inv_sqrt_omega[i];
            norm2 += x[i] * x[i];
        }
        const double inv_norm = 1.0 / std::sqrt(norm2);
        double v = 0.0;
        for (int i = 0; i < n; ++i) {
            x[i] *= inv_norm;
            v += a_shifted[i] * x[i] * x[i];
        }
        const double log_acc =
            v - 0.5 * (b - n) + 0.5 * n * std::log((1.0 - 2.0 * v / b) * b / n);
        if (log_acc > 1e-9)
            throw NumericError("sample_bingham_exact: acceptance bound violated (log ratio " +
                               std::to_string(log_acc) + ")");
        if (std::log(rng.uniform()) <= log_acc) {
            for (int i = 0; i < n; ++i) out(k, i) = x[i];
            ++k;
            ++accepted;
            window_start = proposals;
        } else if (proposals - window_start > 2'000'000) {
            throw NumericError("sample_bingham_exact: sampler stalled (acceptance < 1e-6; b=" +
                               std::to_string(b) + ")");
        }
    }
    if (diag) {
        diag->b = b;
        diag->proposals = proposals;
        diag->accepted = accepted;
    }
    return out;
}

struct MhDiagnostics {
    double final_step_size = 0.0;
    double acceptance_rate = 0.0;
};

// Metropolis baseline: proposal x' = (x + step xi)/|x + step xi|, acceptance
// min(1, exp(beta N (E' - E))). Step size tuned toward ~30% acceptance
// during burn-in; emits thinned states.
inline Eigen::MatrixXd sample_mh(const GibbsTarget& tgt, Philox& rng, int steps,
                                 double step_size, int burn_in, int thin,
                                 MhDiagnostics* diag = nullptr) {
    if (!(step_size > 0.0)) throw DomainError("sample_mh: step size must be positive");
    if (thin < 1 || steps < 1) throw DomainError("sample_mh: steps and thin must be >= 1");
    const int n = tgt.n();
    std::vector<double> x(n), prop(n);
    double norm2 = 0.0;
    for (int i = 0; i < n; ++i) {
        x[i] = rng.normal();
        norm2 += x[i] * x[i];
    }
    for (int i = 0; i < n; ++i) x[i] /= std::sqrt(norm2);
    double energy = tgt.energy(x.data());

    const int kept = steps / thin;
    Eigen::MatrixXd out(kept, n);
    int emitted = 0;
    long accepted = 0, counted = 0;
    int tune_acc = 0, tune_tot = 0;
    for (long it = 0; it < burn_in + steps; ++it) {
        double pnorm2 = 0.0;
        for (int i = 0; i < n; ++i) {
            prop[i] = x[i] + step_size * rng.normal();
            pnorm2 += prop[i] * prop[i];
        }
        const double inv = 1.0 / std::sqrt(pnorm2);
        for (int i = 0; i < n; ++i) prop[i] *= inv;
        const double pe = tgt.energy(prop.data());
        const bool accept = std::log(rng.uniform()) <= tgt.beta * n * (pe - energy);
        if (accept) {
            x.swap(prop);
            energy = pe;
        }
        if (it < burn_in) {
            tune_acc += accept;
            if (++tune_tot == 100) {
                step_size *= (tune_acc > 30) ? 1.1 : (1.0 / 1.1);
                tune_acc = 0;
                tune_tot = 0;
            }
        } else {
            accepted += accept;
            ++counted;
            const long post = it - burn_in;
            if ((post + 1) % thin == 0 && emitted < kept) {
                for (int i = 0; i < n; ++i) out(emitted, i) = x[i];
                ++emitted;
            }
        }
    }
    if (diag) {
        diag->final_step_size = step_size;
        diag->acceptance_rate = counted > 0 ? static_cast<double>(accepted) / counted : 0.0;
    }
    return out;
}

enum class SamplerKind { BinghamExact, Metropolis };

inline const char* to_string(SamplerKind s) {
    return s == SamplerKind::BinghamExact ? "bingham-exact" : "metropolis";
}

struct OverlapBatch {
    std::vector<double> r12; // <x, y> per disjoint replica pair
    std::vector<double> u;   // sqrt(N (1 - beta^2)) * r12
    int pair_count = 0;
    SamplerKind sampler = SamplerKind::BinghamExact;
    std::uint64_t master_seed = 0;
    std::uint64_t replica_index = 0;
};

// Two independent replicas per pair from the same disorder realization.
inline OverlapBatch overlap_batch(const GibbsTarget& tgt, SamplerKind sampler,
                                  std::uint64_t master_seed, std::uint64_t replica_index,
                                  int pairs, BinghamDiagnostics* diag = nullptr) {
    if (pairs < 1) throw DomainError("overlap_batch: pairs must be >= 1");
    const int n = tgt.n();
    Philox rng(master_seed, StreamPurpose::GibbsProposal, replica_index);
    Eigen::MatrixXd samples;
    if (sampler == SamplerKind::BinghamExact) {
        samples = sample_bingham_exact(tgt, rng, 2 * pairs, diag);
    } else {
        const int thin = 2 * n;
        samples = sample_mh(tgt, rng, 2 * pairs * thin, 0.5 / std::sqrt(n), 5000 * 1, thin);
    }
    OverlapBatch batch;
    batch.pair_count = pairs;
    batch.sampler = sampler;
    batch.master_seed = master_seed;
    batch.replica_index = replica_index;
    batch.r12.resize(pairs);
    batch.u.resize(pairs);
    const double scale = std::sqrt(n * (1.0 - tgt.beta * tgt.beta));
    for (int k = 0; k < pairs; ++k) {
        batch.r12[k] = samples.row(2 * k).dot(samples.row(2 * k + 1));
        batch.u[k] = scale * batch.r12[k];
    }
    return batch;
}

struct OracleValue {
    double value = 0.0;
    double error_estimate = 0.0;
};

namespace detail {

// N=2: <e^{t R12}> = iint w(th) w(ph) e^{t cos(th-ph)} / (int w)^2 with
// w(th) = exp(2 beta (l1 cos^2 th + l2 sin^2 th)); periodic trapezoid rule.
inline double torus_mgf(double l1, double l2, double beta, double t, int nodes) {
    std::vector<double> w(nodes), cs(nodes), sn(nodes);
    for (int i = 0; i < nodes; ++i) {
        const double th = 2.0 * std::numbers::pi * i / nodes;
        cs[i] = std::cos(th);
        sn[i] = std::sin(th);
        w[i] = std::exp(2.0 * beta * (l1 * cs[i] * cs[i] + l2 * sn[i] * sn[i]));
    }
    KahanSum<double> num, den;
    for (int i = 0; i < nodes; ++i) {
        den.add(w[i]);
        KahanSum<double> row;
        for (int j = 0; j < nodes; ++j)
            row.add(w[j] * std::exp(t * (cs[i] * cs[j] + sn[i] * sn[j])));
        num.add(w[i] * row.value());
    }
    return num.value() / (den.value() * den.value());
}

// N=3: Gauss-Legendre in u = cos(theta), trapezoid in phi, both replicas.
inline double sphere3_mgf(const std::vector<double>& lam, double beta, double t, int nodes) {
    const QuadratureRule gl = gauss_legendre(nodes);
    const int nphi = 2 * nodes;
    // tabulate points and weights of one replica
    const int npts = nodes * nphi;
    std::vector<double> X(npts), Y(npts), Z(npts), W(npts);
    int k = 0;
    for (int iu = 0; iu < nodes; ++iu) {
        const double u = gl.nodes[iu];
        const double r = std::sqrt(std::max(0.0, 1.0 - u * u));
        for (int ip = 0; ip < nphi; ++ip) {
            const double phi = 2.0 * std::numbers::pi * ip / nphi;
            X[k] = r * std::cos(phi);
            Y[k] = r * std::sin(phi);
            Z[k] = u;
            const double dens = std::exp(
                3.0 * beta * (lam[0] * X[k] * X[k] + lam[1] * Y[k] * Y[k] + lam[2] * Z[k] * Z[k]));
            W[k] = gl.weights[iu] * dens;
            ++k;
        }
    }
    KahanSum<double> den;
    for (int i = 0; i < npts; ++i) den.add(W[i]);
    KahanSum<double> num;
    for (int i = 0; i < npts; ++i) {
        KahanSum<double> row;
        for (int j = 0; j < npts; ++j)
            row.add(W[j] * std::exp(t * (X[i] * X[j] + Y[i] * Y[j] + Z[i] * Z[j])));
        num.add(W[i] * row.value());
    }
    return num.value() / (den.value() * den.value());
}

} // namespace detail

// Brute-force angular quadrature of the defining overlap integral, N in {2,3}.
inline OracleValue oracle_mgf_small_n(const GibbsTarget& tgt, double t, int nodes = 512) {
    const int n = tgt.n();
    const auto& lam = tgt.spec->lambda;
    OracleValue out;
    if (n == 2) {
        const double full = detail::torus_mgf(lam[0], lam[1], tgt.beta, t, nodes);
        const double half = detail::torus_mgf(lam[0], lam[1], tgt.beta, t, nodes / 2);
        out.value = full;
        out.error_estimate = std::abs(full - half);
    } else if (n == 3) {
        const int m = std::min(nodes, 48);
        const double full = detail::sphere3_mgf(lam, tgt.beta, t, m);
        const double half = detail::sphere3_mgf(lam, tgt.beta, t, m / 2);
        out.value = full;
        out.error_estimate = std::abs(full - half);
    } else {
        throw DomainError("oracle_mgf_small_n: only N=2 and N=3 are supported");
    }
    return out;
}

// Moment summary of the normalized overlap in a batch (jackknife SEs).
inline MomentSummary moment_summary(const OverlapBatch& batch) {
    if (batch.pair_count < 100) throw DomainError("moment_summary: need >= 100 pairs");
    return moment_summary(batch.u);
}

} // namespace ssk
