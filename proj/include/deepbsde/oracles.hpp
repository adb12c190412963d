#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "deepbsde/models.hpp"
#include "deepbsde/paths.hpp"
#include "deepbsde/rng.hpp"

namespace deepbsde {

struct PriceEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::int64_t n_paths = 0;
    std::uint64_t seed = 0;
};

/// Plain Monte Carlo e^{-rT} E[g(X_T)] with per-path substreams. Payoffs
/// land in one buffer summed in path order, so the estimate is identical
/// for any worker count.
inline PriceEstimate mc_price(const FbsdeProblem& problem, std::uint64_t seed,
                              std::int64_t n_paths, int workers = 0) {
    problem.validate();
    if (n_paths < 1) throw std::invalid_argument("mc_price: n_paths >= 1 required");
    if (workers <= 0)
        workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const TerminalSimulator sim(problem);
    const int d = sim.dimension();
    std::vector<double> payoff(static_cast<std::size_t>(n_paths));
    const auto run_range = [&](std::int64_t begin, std::int64_t end) {
        std::vector<double> x(d);
        for (std::int64_t p = begin; p < end; ++p) {
            RngStream rng = make_stream(seed, StreamRole::mc_oracle, static_cast<std::uint64_t>(p));
            sim.draw(rng, x.data());
            payoff[static_cast<std::size_t>(p)] = problem.terminal(x.data(), d);
        }
    };
    if (workers == 1 || n_paths < 1024) {
        run_range(0, n_paths);
    } else {
        std::vector<std::thread> threads;
        const std::int64_t chunk = (n_paths + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const std::int64_t b = w * chunk;
            const std::int64_t e = std::min<std::int64_t>(n_paths, b + chunk);
            if (b < e) threads.emplace_back(run_range, b, e);
        }
        for (auto& t : threads) t.join();
    }
    double sum = 0.0, sum_sq = 0.0;
    for (double v : payoff) {
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / static_cast<double>(n_paths);
    const double var = std::max(0.0, sum_sq / static_cast<double>(n_paths) - mean * mean);
    const double discount = std::exp(-problem.discount_rate * problem.horizon);
    PriceEstimate est;
    est.value = discount * mean;
    est.stderr_ = discount * std::sqrt(var / static_cast<double>(n_paths));
    est.n_paths = n_paths;
    est.seed = seed;
    return est;
}

/// E[e^{i q ln X_horizon}] for the pure-jump exponential model with
/// Gaussian marks, generalized transform (q may be complex; q = -i gives
/// the martingale identity E[X_T] = x0).
inline std::complex<double> pure_jump_char_fn(const GaussianJumpDiffusionSpec& spec,
                                              std::complex<double> q, double horizon) {
    spec.validate();
    if (spec.d != 1)
        throw std::invalid_argument("pure_jump_char_fn: one-dimensional model expected");
    const std::complex<double> i(0.0, 1.0);
    const auto psi = [&](std::complex<double> w) {
        return spec.lambda *
               (std::exp(i * w * spec.mu_jump -
                         0.5 * w * w * spec.sigma_jump * spec.sigma_jump) -
                1.0);
    };
    const std::complex<double> exponent =
        i * q * std::log(spec.x0[0]) - i * q * horizon * psi(std::complex<double>(0.0, -1.0)) +
        horizon * psi(q);
    return std::exp(exponent);
}

/// Characteristic function of ln X_t for the simulated CGMY approximation:
/// compensated CGMY jumps plus the deterministic drift (r - kappa_c) t.
/// The compensated exponent is
///   psi(u) = C Gamma(-Y) [(M-iu)^Y - M^Y + (G+iu)^Y - G^Y]
///            - i u C Gamma(1-Y) [M^{Y-1} - G^{Y-1}].
inline std::complex<double> cgmy_char_fn(const CgmySpec& spec, double u, double t) {
    spec.validate();
    const std::complex<double> i(0.0, 1.0);
    std::complex<double> psi(0.0, 0.0);
    if (spec.C > 0.0) {
        const std::complex<double> iu = i * u;
        psi = spec.C * specfun::gamma_real(-spec.Y) *
                  (std::pow(spec.M - iu, spec.Y) - std::pow(spec.M, spec.Y) +
                   std::pow(spec.G + iu, spec.Y) - std::pow(spec.G, spec.Y)) -
              iu * spec.C * specfun::gamma_real(1.0 - spec.Y) *
                  (std::pow(spec.M, spec.Y - 1.0) - std::pow(spec.G, spec.Y - 1.0));
    }
    const double drift = spec.r + cgmy_drift_compensator(spec);
    const std::complex<double> exponent =
        i * u * (std::log(spec.x0) + drift * t) + t * psi;
    return std::exp(exponent);
}

struct DensityGrid {
    double x_min = 0.0;
    double dx = 0.0;
    std::vector<double> values;

    double integral() const {
        double acc = 0.0;
        for (double v : values) acc += v;
        return acc * dx;
    }
    double x_at(std::size_t j) const { return x_min + static_cast<double>(j) * dx; }
};

namespace detail {

// Iterative radix-2 Cooley-Tukey, in place, forward transform
// X_j = sum_k x_k exp(-2 pi i k j / N).
inline void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft: size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -2.0 * 3.14159265358979323846 / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

} // namespace detail

/// Fourier inversion of a characteristic function onto a regular x grid,
/// trapezoid end-corrected. Throws when the frequency window is too narrow
/// for the tails of |phi| (boundary |phi| above 1e-6).
inline DensityGrid fft_density(const std::function<std::complex<double>(double)>& char_fn,
                               std::size_t n_points, double x_min, double x_max) {
    if (n_points < 4 || (n_points & (n_points - 1)) != 0)
        throw std::invalid_argument("fft_density: n_points must be a power of two >= 4");
    if (!(x_max > x_min)) throw std::invalid_argument("fft_density: empty x range");
    const double dx = (x_max - x_min) / static_cast<double>(n_points);
    const double du = 2.0 * 3.14159265358979323846 / (static_cast<double>(n_points) * dx);
    const double u_max = 0.5 * static_cast<double>(n_points) * du;
    if (std::abs(char_fn(u_max)) > 1e-6 || std::abs(char_fn(-u_max)) > 1e-6)
        throw std::runtime_error("fft_density: grid too narrow, |char_fn| at the boundary is "
                                 "above 1e-6; increase n_points or shrink the x range");

    std::vector<std::complex<double>> a(n_points);
    const std::complex<double> i(0.0, 1.0);
    const double half_n = 0.5 * static_cast<double>(n_points);
    for (std::size_t k = 0; k < n_points; ++k) {
        const double u = (static_cast<double>(k) - half_n) * du;
        double w = 1.0;
        if (k == 0 || k + 1 == n_points) w = 0.5; // trapezoid ends
        a[k] = w * char_fn(u) * std::exp(-i * ((static_cast<double>(k) - half_n) * du * x_min));
    }
    detail::fft_radix2(a);
    DensityGrid grid;
    grid.x_min = x_min;
    grid.dx = dx;
    grid.values.resize(n_points);
    const double scale = du / (2.0 * 3.14159265358979323846);
    for (std::size_t j = 0; j < n_points; ++j) {
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        grid.values[j] = scale * sign * a[j].real();
    }
    return grid;
}

/// fft_density with the default 2^14-point grid, doubling the point count
/// until the boundary criterion |phi(u_max)| < 1e-12 holds.
inline DensityGrid fft_density_auto(const std::function<std::complex<double>(double)>& char_fn,
                                    double x_min = -8.0, double x_max = 8.0,
                                    std::size_t n_points = 1 << 14) {
    const double pi = 3.14159265358979323846;
    while (n_points <= (1u << 22)) {
        const double dx = (x_max - x_min) / static_cast<double>(n_points);
        const double u_max = pi / dx;
        if (std::abs(char_fn(u_max)) < 1e-12 && std::abs(char_fn(-u_max)) < 1e-12)
            return fft_density(char_fn, n_points, x_min, x_max);
        n_points <<= 1;
    }
    throw std::runtime_error("fft_density_auto: could not satisfy the boundary criterion");
}

/// Reference value of the pure-jump expectation problem: Y_0 = X_0.
inline double pure_jump_reference(const GaussianJumpDiffusionSpec& spec) {
    spec.validate();
    return spec.x0[0];
}

} // namespace deepbsde
