#pragma once

// Counter-based RNG (Philox4x32-10) with named streams.
//
// Every stream is identified by (master seed, purpose tag, replica index),
// so replicas can be sampled in parallel and in any order while the draws
// stay bit-reproducible.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "ssk/errors.hpp"

namespace ssk {

enum class StreamPurpose : std::uint32_t {
    Disorder = 1,      // i.i.d. coupling entries
    Tridiagonal = 2,   // tridiagonal ensemble draws
    GibbsProposal = 3, // Bingham / MH proposal vectors
    GibbsAccept = 4,   // accept/reject uniforms
    Synthetic = 5,     // synthetic statistical self-tests
    Scratch = 6,
};

class Philox {
public:
    Philox(std::uint64_t master_seed, StreamPurpose purpose, std::uint64_t replica)
        : key_{static_cast<std::uint32_t>(master_seed),
               static_cast<std::uint32_t>(master_seed >> 32)},
          replica_lo_(static_cast<std::uint32_t>(replica)),
          replica_hi_(static_cast<std::uint32_t>(replica >> 32) ^
                      (static_cast<std::uint32_t>(purpose) * 0x9E3779B9u)) {}

    std::uint64_t next_u64() {
        if (block_pos_ >= 4) refill();
        const std::uint64_t lo = block_[block_pos_];
        const std::uint64_t hi = block_[block_pos_ + 1];
        block_pos_ += 2;
        return lo | (hi << 32);
    }

    // uniform on (0,1); 53-bit resolution, never exactly 0 or 1
    double uniform() {
        const std::uint64_t r = next_u64() >> 11;
        return (static_cast<double>(r) + 0.5) * 0x1p-53;
    }

    // standard normal via Box-Muller (pairs cached)
    double normal() {
        if (has_cached_normal_) {
            has_cached_normal_ = false;
            return cached_normal_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * std::numbers::pi * u2;
        cached_normal_ = r * std::sin(th);
        has_cached_normal_ = true;
        return r * std::cos(th);
    }

    // Gamma(alpha, 1) by Marsaglia-Tsang squeeze
    double gamma(double alpha) {
        if (!(alpha > 0.0)) throw DomainError("rng: gamma shape must be positive");
        if (alpha < 1.0) {
            const double g = gamma(alpha + 1.0);
            return g * std::pow(uniform(), 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // chi-distributed draw with nu degrees of freedom
    double chi(double nu) { return std::sqrt(2.0 * gamma(0.5 * nu)); }

private:
    void refill() {
        std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(draw_index_),
            static_cast<std::uint32_t>(draw_index_ >> 32), replica_lo_, replica_hi_};
        std::array<std::uint32_t, 2> key = key_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = 0xD2511F53ull * ctr[0];
            const std::uint64_t p1 = 0xCD9E8D57ull * ctr[2];
            const std::array<std::uint32_t, 4> nxt = {
                static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                static_cast<std::uint32_t>(p1),
                static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                static_cast<std::uint32_t>(p0)};
            ctr = nxt;
            key[0] += 0x9E3779B9u;
            key[1] += 0xBB67AE85u;
        }
        block_ = ctr;
        block_pos_ = 0;
        ++draw_index_;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint32_t replica_lo_;
    std::uint32_t replica_hi_;
    std::uint64_t draw_index_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int block_pos_ = 4;
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

} // namespace ssk
