#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "deepbsde/models.hpp"
#include "deepbsde/rng.hpp"

namespace deepbsde {

struct JumpEvent {
    std::int32_t asset;
    double mark; // signed log-jump size z; the state move is x_j -> x_j e^z
};

/// Which substream family a simulation draws from. base shifts the first
/// path's stream id so successive training iterations never reuse streams.
struct StreamDomain {
    std::uint64_t seed = 0;
    StreamRole role = StreamRole::path_sim;
    std::uint64_t base = 0;

    RngStream stream(std::uint64_t path_index) const {
        return make_stream(seed, role, base + path_index);
    }
};

/// Simulated forward paths with everything the BSDE rollout consumes:
/// states, Brownian increments, per-(path,step) jump events in CSR layout,
/// and the per-step deterministic compensator constants of the scheme.
struct PathBatch {
    int batch = 0;
    int n_steps = 0;
    int d = 0;
    std::uint8_t scheme_tag = 0; // 0 euler, 1 exponential_exact, 2 cgmy
    std::uint64_t seed = 0;
    std::uint64_t stream_base = 0;
    double eps = 0.0; // CGMY threshold, 0 otherwise

    std::vector<double> x;                  // [batch][n_steps+1][d]
    std::vector<double> dw;                 // [batch][n_steps][d]
    std::vector<double> compensator_drift;  // [n_steps][d]
    std::vector<JumpEvent> events;          // CSR over (path, step), path-major
    std::vector<std::uint64_t> offsets;     // batch*n_steps + 1 entries

    const double* state(int p, int n) const {
        return &x[(static_cast<std::size_t>(p) * (n_steps + 1) + n) * d];
    }
    double* state(int p, int n) {
        return &x[(static_cast<std::size_t>(p) * (n_steps + 1) + n) * d];
    }
    const double* brownian(int p, int n) const {
        return &dw[(static_cast<std::size_t>(p) * n_steps + n) * d];
    }
    double* brownian(int p, int n) {
        return &dw[(static_cast<std::size_t>(p) * n_steps + n) * d];
    }
    const double* drift_constants(int n) const {
        return &compensator_drift[static_cast<std::size_t>(n) * d];
    }
    std::span<const JumpEvent> events_at(int p, int n) const {
        const std::size_t cell = static_cast<std::size_t>(p) * n_steps + n;
        return {events.data() + offsets[cell],
                static_cast<std::size_t>(offsets[cell + 1] - offsets[cell])};
    }
};

namespace detail {

// Step kernels are the single source of truth for the arithmetic; the
// simulator and the replay check both call them, so stored states can be
// reproduced bit-exactly from stored increments.

// x_{n+1} = x + b(x) dt + sigma(x) dW + sum Gamma(x, z_i) - dt int Gamma(x,.) nu,
// with multiplicative jumps Gamma_j(x, z) = x_j (e^z - 1). drift_const[j]
// carries dt (r_j - kappa_j), i.e. everything deterministic per unit state.
inline void euler_step(const GaussianJumpDiffusionSpec& spec, const double* x,
                       const double* dw, std::span<const JumpEvent> ev,
                       const double* drift_const, double* out) {
    for (int j = 0; j < spec.d; ++j)
        out[j] = x[j] + x[j] * drift_const[j] + spec.sigma[j] * x[j] * dw[j];
    for (const auto& e : ev) out[e.asset] += x[e.asset] * std::expm1(e.mark);
}

// x_{n+1,j} = x_j exp(drift_j + sigma_diff_j dW_j + sum of marks on j).
inline void exponential_step(int d, const double* sigma_diff, const double* x,
                             const double* dw, std::span<const JumpEvent> ev,
                             const double* drift_const, double* out) {
    double mark_sum_static[8];
    std::vector<double> mark_sum_dyn;
    double* mark_sum = mark_sum_static;
    if (d > 8) {
        mark_sum_dyn.assign(d, 0.0);
        mark_sum = mark_sum_dyn.data();
    } else {
        std::memset(mark_sum_static, 0, sizeof(double) * d);
    }
    for (const auto& e : ev) mark_sum[e.asset] += e.mark;
    for (int j = 0; j < d; ++j)
        out[j] = x[j] * std::exp(drift_const[j] + sigma_diff[j] * dw[j] + mark_sum[j]);
}

inline std::uint8_t scheme_tag_of(const FbsdeProblem& problem) {
    if (problem.is_cgmy()) return 2;
    return problem.scheme == Scheme::euler ? 0 : 1;
}

// Per-asset constants entering the step kernels.
struct SchemeConstants {
    std::vector<double> drift;      // per asset
    std::vector<double> sigma_diff; // per asset, exponential schemes only
    double lambda_plus = 0.0;       // CGMY big-jump intensities
    double lambda_minus = 0.0;
};

inline SchemeConstants scheme_constants(const FbsdeProblem& problem) {
    SchemeConstants k;
    const double dt = problem.dt();
    if (problem.is_cgmy()) {
        const auto& spec = problem.cgmy_spec();
        const auto& agg = problem.cgmy;
        const double c = -agg.kappa_c;
        k.drift = {(spec.r + c + agg.b_eps_plus - agg.b_eps_minus) * dt};
        k.sigma_diff = {agg.sigma_eps};
        k.lambda_plus = agg.lambda_eps_plus;
        k.lambda_minus = agg.lambda_eps_minus;
        return k;
    }
    const auto& spec = problem.gauss_spec();
    const double kappa = merton_exponential_compensator(spec).kappa;
    k.drift.resize(spec.d);
    k.sigma_diff.resize(spec.d);
    for (int j = 0; j < spec.d; ++j) {
        if (problem.scheme == Scheme::euler) {
            k.drift[j] = dt * (spec.r[j] - kappa);
        } else {
            k.drift[j] = dt * (spec.r[j] - 0.5 * spec.sigma[j] * spec.sigma[j] - kappa);
        }
        k.sigma_diff[j] = spec.sigma[j];
    }
    return k;
}

// One path of the Gaussian-mark model. Draw order per step: all Brownian
// increments, then per asset the jump count followed by its marks.
inline void simulate_gauss_path(const FbsdeProblem& problem, const SchemeConstants& k,
                                RngStream& rng, int p, PathBatch& out,
                                std::vector<JumpEvent>& path_events,
                                std::vector<std::uint32_t>& cell_counts) {
    const auto& spec = problem.gauss_spec();
    const double dt = problem.dt();
    const double sqrt_dt = std::sqrt(dt);
    const double jump_mean = spec.lambda * dt;
    double* x0 = out.state(p, 0);
    for (int j = 0; j < spec.d; ++j) x0[j] = spec.x0[j];
    std::vector<JumpEvent> step_events;
    for (int n = 0; n < problem.n_steps; ++n) {
        double* dw = out.brownian(p, n);
        for (int j = 0; j < spec.d; ++j) dw[j] = sqrt_dt * rng.normal();
        step_events.clear();
        for (int j = 0; j < spec.d; ++j) {
            const long count = rng.poisson_count(jump_mean);
            for (long i = 0; i < count; ++i)
                step_events.push_back({j, spec.mu_jump + spec.sigma_jump * rng.normal()});
        }
        cell_counts[static_cast<std::size_t>(p) * problem.n_steps + n] =
            static_cast<std::uint32_t>(step_events.size());
        path_events.insert(path_events.end(), step_events.begin(), step_events.end());
        if (problem.scheme == Scheme::euler)
            euler_step(spec, out.state(p, n), dw, step_events, k.drift.data(), out.state(p, n + 1));
        else
            exponential_step(spec.d, k.sigma_diff.data(), out.state(p, n), dw, step_events,
                             k.drift.data(), out.state(p, n + 1));
    }
}

// One path of the CGMY approximation. Draw order per step: Brownian
// increment, positive-tail count then marks, negative-tail count then marks.
inline void simulate_cgmy_path(const FbsdeProblem& problem, const SchemeConstants& k,
                               RngStream& rng, int p, PathBatch& out,
                               std::vector<JumpEvent>& path_events,
                               std::vector<std::uint32_t>& cell_counts) {
    const auto& spec = problem.cgmy_spec();
    const double dt = problem.dt();
    const double sqrt_dt = std::sqrt(dt);
    out.state(p, 0)[0] = spec.x0;
    std::vector<JumpEvent> step_events;
    for (int n = 0; n < problem.n_steps; ++n) {
        double* dw = out.brownian(p, n);
        dw[0] = sqrt_dt * rng.normal();
        step_events.clear();
        const long n_plus = rng.poisson_count(k.lambda_plus * dt);
        for (long i = 0; i < n_plus; ++i)
            step_events.push_back({0, rng.tempered_stable_mark(spec.C, spec.M, spec.Y, spec.eps)});
        const long n_minus = rng.poisson_count(k.lambda_minus * dt);
        for (long i = 0; i < n_minus; ++i)
            step_events.push_back({0, -rng.tempered_stable_mark(spec.C, spec.G, spec.Y, spec.eps)});
        cell_counts[static_cast<std::size_t>(p) * problem.n_steps + n] =
            static_cast<std::uint32_t>(step_events.size());
        path_events.insert(path_events.end(), step_events.begin(), step_events.end());
        exponential_step(1, k.sigma_diff.data(), out.state(p, n), dw, step_events,
                         k.drift.data(), out.state(p, n + 1));
    }
}

} // namespace detail

/// Simulate a batch of forward paths. Paths own disjoint RNG substreams,
/// so results are identical for any worker count.
inline PathBatch simulate(const FbsdeProblem& problem, const StreamDomain& streams, int batch,
                          int workers = 1) {
    problem.validate();
    if (batch < 1) throw std::invalid_argument("simulate: batch >= 1 required");
    const int d = problem.dimension();
    PathBatch out;
    out.batch = batch;
    out.n_steps = problem.n_steps;
    out.d = d;
    out.scheme_tag = detail::scheme_tag_of(problem);
    out.seed = streams.seed;
    out.stream_base = streams.base;
    out.eps = problem.is_cgmy() ? problem.cgmy_spec().eps : 0.0;
    out.x.resize(static_cast<std::size_t>(batch) * (problem.n_steps + 1) * d);
    out.dw.resize(static_cast<std::size_t>(batch) * problem.n_steps * d);

    const detail::SchemeConstants constants = detail::scheme_constants(problem);
    out.compensator_drift.resize(static_cast<std::size_t>(problem.n_steps) * d);
    for (int n = 0; n < problem.n_steps; ++n)
        for (int j = 0; j < d; ++j)
            out.compensator_drift[static_cast<std::size_t>(n) * d + j] = constants.drift[j];

    std::vector<std::vector<JumpEvent>> per_path_events(batch);
    std::vector<std::uint32_t> cell_counts(static_cast<std::size_t>(batch) * problem.n_steps, 0);

    const auto run_range = [&](int p_begin, int p_end) {
        for (int p = p_begin; p < p_end; ++p) {
            RngStream rng = streams.stream(static_cast<std::uint64_t>(p));
            if (problem.is_cgmy())
                detail::simulate_cgmy_path(problem, constants, rng, p, out, per_path_events[p],
                                           cell_counts);
            else
                detail::simulate_gauss_path(problem, constants, rng, p, out, per_path_events[p],
                                            cell_counts);
        }
    };
    if (workers <= 1) {
        run_range(0, batch);
    } else {
        std::vector<std::thread> threads;
        const int chunk = (batch + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int b = w * chunk;
            const int e = std::min(batch, b + chunk);
            if (b < e) threads.emplace_back(run_range, b, e);
        }
        for (auto& t : threads) t.join();
    }

    // stitch per-path event lists into one CSR table
    out.offsets.assign(static_cast<std::size_t>(batch) * problem.n_steps + 1, 0);
    std::size_t total = 0;
    for (std::size_t cell = 0; cell < cell_counts.size(); ++cell) {
        out.offsets[cell] = total;
        total += cell_counts[cell];
    }
    out.offsets.back() = total;
    out.events.reserve(total);
    for (int p = 0; p < batch; ++p)
        out.events.insert(out.events.end(), per_path_events[p].begin(), per_path_events[p].end());
    return out;
}

inline PathBatch simulate_euler(const FbsdeProblem& problem, const StreamDomain& streams,
                                int batch, int workers = 1) {
    if (problem.is_cgmy())
        throw std::invalid_argument("simulate_euler: requires a finite-activity jump model");
    FbsdeProblem p = problem;
    p.scheme = Scheme::euler;
    return simulate(p, streams, batch, workers);
}

inline PathBatch simulate_exponential_exact(const FbsdeProblem& problem,
                                            const StreamDomain& streams, int batch,
                                            int workers = 1) {
    FbsdeProblem p = problem;
    p.scheme = Scheme::exponential_exact;
    return simulate(p, streams, batch, workers);
}

/// Rebuild every state from x0 + stored increments through the same step
/// kernels. Training never calls this; tests assert bit-exact agreement.
inline std::vector<double> replay_states(const FbsdeProblem& problem, const PathBatch& batch) {
    const int d = batch.d;
    std::vector<double> states(batch.x.size());
    const detail::SchemeConstants constants = detail::scheme_constants(problem);
    for (int p = 0; p < batch.batch; ++p) {
        double* x0 = &states[static_cast<std::size_t>(p) * (batch.n_steps + 1) * d];
        const auto init = problem.initial_state();
        for (int j = 0; j < d; ++j) x0[j] = init[j];
        for (int n = 0; n < batch.n_steps; ++n) {
            const double* cur =
                &states[(static_cast<std::size_t>(p) * (batch.n_steps + 1) + n) * d];
            double* next =
                &states[(static_cast<std::size_t>(p) * (batch.n_steps + 1) + n + 1) * d];
            const auto ev = batch.events_at(p, n);
            if (batch.scheme_tag == 0)
                detail::euler_step(problem.gauss_spec(), cur, batch.brownian(p, n), ev,
                                   batch.drift_constants(n), next);
            else
                detail::exponential_step(d, constants.sigma_diff.data(), cur,
                                         batch.brownian(p, n), ev, batch.drift_constants(n), next);
        }
    }
    return states;
}

/// Draws terminal states X_T one path at a time without storing paths.
/// For the exponential schemes the per-step exponents telescope, so one
/// step over [0,T] has exactly the law of the full grid; the Euler scheme
/// walks the whole grid.
class TerminalSimulator {
public:
    explicit TerminalSimulator(const FbsdeProblem& problem) : problem_(problem) {
        problem_.validate();
        step_constants_ = detail::scheme_constants(problem_);
        FbsdeProblem single = problem_;
        single.n_steps = 1;
        whole_constants_ = detail::scheme_constants(single);
        euler_grid_ = problem_.scheme == Scheme::euler && !problem_.is_cgmy();
    }

    int dimension() const { return problem_.dimension(); }

    void draw(RngStream& rng, double* out) const {
        const int d = problem_.dimension();
        if (euler_grid_) {
            const auto& spec = problem_.gauss_spec();
            const double dt = problem_.dt();
            const double sqrt_dt = std::sqrt(dt);
            std::vector<double> cur = spec.x0;
            std::vector<double> next(d);
            std::vector<double> dw(d);
            std::vector<JumpEvent> ev;
            for (int n = 0; n < problem_.n_steps; ++n) {
                for (int j = 0; j < d; ++j) dw[j] = sqrt_dt * rng.normal();
                ev.clear();
                for (int j = 0; j < d; ++j) {
                    const long count = rng.poisson_count(spec.lambda * dt);
                    for (long i = 0; i < count; ++i)
                        ev.push_back({j, spec.mu_jump + spec.sigma_jump * rng.normal()});
                }
                detail::euler_step(spec, cur.data(), dw.data(), ev, step_constants_.drift.data(),
                                   next.data());
                std::swap(cur, next);
            }
            std::copy(cur.begin(), cur.end(), out);
            return;
        }
        const double T = problem_.horizon;
        const double sqrt_T = std::sqrt(T);
        if (problem_.is_cgmy()) {
            const auto& spec = problem_.cgmy_spec();
            const double dw = sqrt_T * rng.normal();
            std::vector<JumpEvent> ev;
            const long n_plus = rng.poisson_count(whole_constants_.lambda_plus * T);
            for (long i = 0; i < n_plus; ++i)
                ev.push_back({0, rng.tempered_stable_mark(spec.C, spec.M, spec.Y, spec.eps)});
            const long n_minus = rng.poisson_count(whole_constants_.lambda_minus * T);
            for (long i = 0; i < n_minus; ++i)
                ev.push_back({0, -rng.tempered_stable_mark(spec.C, spec.G, spec.Y, spec.eps)});
            const double x0 = spec.x0;
            detail::exponential_step(1, whole_constants_.sigma_diff.data(), &x0, &dw, ev,
                                     whole_constants_.drift.data(), out);
            return;
        }
        const auto& spec = problem_.gauss_spec();
        std::vector<double> dw(d);
        for (int j = 0; j < d; ++j) dw[j] = sqrt_T * rng.normal();
        std::vector<JumpEvent> ev;
        for (int j = 0; j < d; ++j) {
            const long count = rng.poisson_count(spec.lambda * T);
            for (long i = 0; i < count; ++i)
                ev.push_back({j, spec.mu_jump + spec.sigma_jump * rng.normal()});
        }
        detail::exponential_step(d, whole_constants_.sigma_diff.data(), spec.x0.data(), dw.data(),
                                 ev, whole_constants_.drift.data(), out);
    }

private:
    FbsdeProblem problem_;
    detail::SchemeConstants step_constants_;
    detail::SchemeConstants whole_constants_;
    bool euler_grid_ = false;
};

// -------------------------------------------------------------------------
// Forward small-jump error study (CGMY): common-random-number coupling.
// -------------------------------------------------------------------------

struct ForwardErrorRow {
    double eps;
    double e_hat;   // mean over paths of sup_n |X^eps_n - X^eps_ref_n|^2
    double stderr_; // Monte Carlo standard error of e_hat
    double bound;   // int_{|z| <= eps} z^2 nu(dz)
};

/// Couples every level eps to the reference level eps_ref = min(eps_list):
/// one event stream at eps_ref; at a coarser eps the events with |z| < eps
/// fold into the diffusion, whose variance gap sigma_eps^2 - sigma_ref^2
/// is driven by a second shared Gaussian per step.
inline std::vector<ForwardErrorRow> forward_error_study(const CgmySpec& base_spec,
                                                        std::vector<double> eps_list,
                                                        const StreamDomain& streams, int batch,
                                                        double horizon = 1.0, int n_steps = 100) {
    base_spec.validate();
    if (eps_list.empty()) throw std::invalid_argument("forward_error_study: empty eps list");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (eps_list[i] >= eps_list[i - 1])
            throw std::invalid_argument("forward_error_study: eps list must be decreasing");
    const double eps_ref = eps_list.back();
    const std::size_t levels = eps_list.size();

    CgmySpec ref_spec = base_spec;
    ref_spec.eps = eps_ref;
    const LevyAggregates ref_agg = cgmy_aggregates(ref_spec);
    std::vector<LevyAggregates> aggs(levels);
    for (std::size_t i = 0; i < levels; ++i) {
        CgmySpec s = base_spec;
        s.eps = eps_list[i];
        aggs[i] = cgmy_aggregates(s);
    }
    const double c_drift = cgmy_drift_compensator(base_spec); // level-independent
    const double dt = horizon / n_steps;
    const double sqrt_dt = std::sqrt(dt);

    std::vector<double> sum(levels, 0.0), sum_sq(levels, 0.0);
    std::vector<double> log_x(levels);
    std::vector<double> sup_sq(levels);
    struct StepDraws {
        double g, g2;
        std::vector<double> marks; // signed, |mark| >= eps_ref
    };
    std::vector<StepDraws> path(n_steps);
    for (int p = 0; p < batch; ++p) {
        RngStream rng = streams.stream(static_cast<std::uint64_t>(p));
        for (int n = 0; n < n_steps; ++n) {
            StepDraws& s = path[n];
            s.g = rng.normal();
            s.g2 = rng.normal();
            s.marks.clear();
            const long n_plus = rng.poisson_count(ref_agg.lambda_eps_plus * dt);
            for (long i = 0; i < n_plus; ++i)
                s.marks.push_back(
                    rng.tempered_stable_mark(base_spec.C, base_spec.M, base_spec.Y, eps_ref));
            const long n_minus = rng.poisson_count(ref_agg.lambda_eps_minus * dt);
            for (long i = 0; i < n_minus; ++i)
                s.marks.push_back(
                    -rng.tempered_stable_mark(base_spec.C, base_spec.G, base_spec.Y, eps_ref));
        }
        for (std::size_t i = 0; i < levels; ++i) {
            log_x[i] = std::log(base_spec.x0);
            sup_sq[i] = 0.0;
        }
        for (int n = 0; n < n_steps; ++n) {
            const StepDraws& s = path[n];
            for (std::size_t i = 0; i < levels; ++i) {
                const LevyAggregates& agg = aggs[i];
                const double var_ref = ref_agg.sigma_eps * ref_agg.sigma_eps;
                const double gap =
                    std::sqrt(std::max(0.0, agg.sigma_eps * agg.sigma_eps - var_ref));
                double incr = (base_spec.r + c_drift + agg.b_eps_plus - agg.b_eps_minus) * dt +
                              ref_agg.sigma_eps * sqrt_dt * s.g + gap * sqrt_dt * s.g2;
                for (double m : s.marks)
                    if (std::fabs(m) >= eps_list[i]) incr += m;
                log_x[i] += incr;
            }
            const double x_ref = std::exp(log_x.back()); // reference level is last in the list
            for (std::size_t i = 0; i < levels; ++i) {
                const double diff = std::exp(log_x[i]) - x_ref;
                if (diff * diff > sup_sq[i]) sup_sq[i] = diff * diff;
            }
        }
        for (std::size_t i = 0; i < levels; ++i) {
            sum[i] += sup_sq[i];
            sum_sq[i] += sup_sq[i] * sup_sq[i];
        }
    }

    std::vector<ForwardErrorRow> rows(levels);
    for (std::size_t i = 0; i < levels; ++i) {
        const double mean = sum[i] / batch;
        const double var = std::max(0.0, sum_sq[i] / batch - mean * mean);
        rows[i].eps = eps_list[i];
        rows[i].e_hat = mean;
        rows[i].stderr_ = std::sqrt(var / batch);
        rows[i].bound = aggs[i].sigma_eps * aggs[i].sigma_eps;
    }
    return rows;
}

// -------------------------------------------------------------------------
// Versioned binary dump of a PathBatch (little-endian throughout).
// -------------------------------------------------------------------------

namespace detail {

inline void put_bytes(std::vector<std::uint8_t>& buf, const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf.insert(buf.end(), b, b + n);
}
template <typename T>
void put(std::vector<std::uint8_t>& buf, T v) {
    static_assert(std::endian::native == std::endian::little, "little-endian format");
    put_bytes(buf, &v, sizeof(v));
}
template <typename T>
T take(const std::vector<std::uint8_t>& buf, std::size_t& pos) {
    if (pos + sizeof(T) > buf.size()) throw std::runtime_error("PathBatch load: truncated data");
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

} // namespace detail

inline constexpr std::uint32_t path_batch_format_version = 1;

inline std::vector<std::uint8_t> dump_path_batch(const PathBatch& b) {
    std::vector<std::uint8_t> buf;
    detail::put_bytes(buf, "DBPB", 4);
    detail::put<std::uint32_t>(buf, path_batch_format_version);
    detail::put<std::uint8_t>(buf, b.scheme_tag);
    detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(b.batch));
    detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(b.n_steps));
    detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(b.d));
    detail::put<std::uint64_t>(buf, b.seed);
    detail::put<std::uint64_t>(buf, b.stream_base);
    detail::put<double>(buf, b.eps);
    for (double v : b.x) detail::put<double>(buf, v);
    for (double v : b.dw) detail::put<double>(buf, v);
    for (double v : b.compensator_drift) detail::put<double>(buf, v);
    detail::put<std::uint64_t>(buf, b.offsets.size());
    for (std::uint64_t v : b.offsets) detail::put<std::uint64_t>(buf, v);
    detail::put<std::uint64_t>(buf, b.events.size());
    for (const auto& e : b.events) {
        detail::put<std::int32_t>(buf, e.asset);
        detail::put<double>(buf, e.mark);
    }
    return buf;
}

inline PathBatch load_path_batch(const std::vector<std::uint8_t>& buf) {
    std::size_t pos = 0;
    char magic[4];
    std::memcpy(magic, buf.data(), 4);
    pos = 4;
    if (std::memcmp(magic, "DBPB", 4) != 0)
        throw std::runtime_error("PathBatch load: bad magic");
    const auto version = detail::take<std::uint32_t>(buf, pos);
    if (version != path_batch_format_version)
        throw std::runtime_error("PathBatch load: unsupported version " + std::to_string(version));
    PathBatch b;
    b.scheme_tag = detail::take<std::uint8_t>(buf, pos);
    b.batch = static_cast<int>(detail::take<std::uint32_t>(buf, pos));
    b.n_steps = static_cast<int>(detail::take<std::uint32_t>(buf, pos));
    b.d = static_cast<int>(detail::take<std::uint32_t>(buf, pos));
    b.seed = detail::take<std::uint64_t>(buf, pos);
    b.stream_base = detail::take<std::uint64_t>(buf, pos);
    b.eps = detail::take<double>(buf, pos);
    b.x.resize(static_cast<std::size_t>(b.batch) * (b.n_steps + 1) * b.d);
    for (auto& v : b.x) v = detail::take<double>(buf, pos);
    b.dw.resize(static_cast<std::size_t>(b.batch) * b.n_steps * b.d);
    for (auto& v : b.dw) v = detail::take<double>(buf, pos);
    b.compensator_drift.resize(static_cast<std::size_t>(b.n_steps) * b.d);
    for (auto& v : b.compensator_drift) v = detail::take<double>(buf, pos);
    b.offsets.resize(detail::take<std::uint64_t>(buf, pos));
    for (auto& v : b.offsets) v = detail::take<std::uint64_t>(buf, pos);
    b.events.resize(detail::take<std::uint64_t>(buf, pos));
    for (auto& e : b.events) {
        e.asset = detail::take<std::int32_t>(buf, pos);
        e.mark = detail::take<double>(buf, pos);
    }
    return b;
}

} // namespace deepbsde
