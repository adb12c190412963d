#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "deepbsde/specfun.hpp"

namespace deepbsde {

/// Deterministic seeded stream: xoshiro256++ state derived from
/// (seed, stream_id) through SplitMix64. Distinct stream ids give
/// independent substreams, so per-path parallelism cannot change draws.
class RngStream {
public:
    static constexpr const char* generator_name = "xoshiro256++/splitmix64-substreams";

    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id) {
        std::uint64_t sm = seed + 0x9E3779B97F4A7C15ULL * (stream_id + 1ULL);
        for (auto& word : state_) word = split_mix(sm);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on (0,1]. Never returns 0, so logs are safe.
    double uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// One standard normal via Box-Muller (two uniforms per draw; no
    /// cached spare, so the draw sequence does not depend on call grouping).
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.28318530717958647692 * u2);
    }

    std::vector<double> normal_vector(std::size_t n) {
        std::vector<double> out(n);
        for (auto& v : out) v = normal();
        return out;
    }

    /// Poisson(mean) draw. Inversion by sequential search for mean <= 30,
    /// Hormann's transformed rejection (PTRD) above.
    long poisson_count(double mean) {
        if (mean < 0.0 || !std::isfinite(mean))
            throw std::domain_error("poisson_count: mean must be finite and non-negative");
        if (mean == 0.0) return 0;
        if (mean <= 30.0) return poisson_inversion(mean);
        return poisson_ptrd(mean);
    }

    /// k i.i.d. Gaussian jump marks N(mu, sigma^2).
    std::vector<double> gaussian_marks(double mu, double sigma, std::size_t k) {
        if (!(sigma > 0.0))
            throw std::domain_error("gaussian_marks: sigma must be positive");
        std::vector<double> out(k);
        for (auto& v : out) v = mu + sigma * normal();
        return out;
    }

    /// One draw from the tempered-stable tail density
    ///   f(z) proportional to exp(-rate z) z^(-1-Y) on [eps, inf).
    /// Proposal: Pareto on [eps, inf) with tail index Y (closed-form inverse
    /// CDF z = eps u^(-1/Y)); acceptance probability exp(-rate (z - eps)).
    double tempered_stable_mark(double c_scale, double rate, double tail_y, double eps) {
        (void)c_scale; // normalization only; the density shape does not depend on it
        if (!(rate > 0.0) || !(eps > 0.0) || !(tail_y > 0.0) || !(tail_y < 1.0))
            throw std::domain_error("tempered_stable_mark: need rate>0, eps>0, Y in (0,1)");
        for (long attempt = 0; attempt < 1000000; ++attempt) {
            const double z = eps * std::pow(uniform(), -1.0 / tail_y);
            if (uniform() <= std::exp(-rate * (z - eps))) return z;
        }
        throw std::runtime_error("tempered_stable_mark: 1e6 consecutive rejections (degenerate parameters)");
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    static std::uint64_t split_mix(std::uint64_t& state) {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    long poisson_inversion(double mean) {
        const double threshold = std::exp(-mean);
        double prod = uniform();
        long k = 0;
        while (prod > threshold) {
            prod *= uniform();
            ++k;
        }
        return k;
    }

    // Transformed rejection with squeeze, Hormann (1993).
    long poisson_ptrd(double mean) {
        const double b = 0.931 + 2.53 * std::sqrt(mean);
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        const double log_mean = std::log(mean);
        while (true) {
            double u = uniform() - 0.5;
            const double v = uniform();
            const double u_shifted = 0.5 - std::fabs(u);
            const double kd = std::floor((2.0 * a / u_shifted + b) * u + mean + 0.43);
            if (u_shifted >= 0.07 && v <= v_r) return static_cast<long>(kd);
            if (kd < 0.0 || (u_shifted < 0.013 && v > u_shifted)) continue;
            const double lhs = std::log(v * inv_alpha / (a / (u_shifted * u_shifted) + b));
            const double rhs = -mean + kd * log_mean - specfun::ln_gamma(kd + 1.0);
            if (lhs <= rhs) return static_cast<long>(kd);
        }
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t state_[4];
};

/// Substream roles keep path simulation, network init, MC pricing and
/// evaluation batches on disjoint id ranges of one master seed.
enum class StreamRole : std::uint64_t {
    path_sim = 1,
    net_init = 2,
    mc_oracle = 3,
    eval_batch = 4,
    study = 5,
};

inline RngStream make_stream(std::uint64_t seed, StreamRole role, std::uint64_t index) {
    return RngStream(seed, (static_cast<std::uint64_t>(role) << 56) + index);
}

} // namespace deepbsde
