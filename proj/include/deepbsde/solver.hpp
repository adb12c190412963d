#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepbsde/adam.hpp"
#include "deepbsde/graph.hpp"
#include "deepbsde/mlp.hpp"
#include "deepbsde/models.hpp"
#include "deepbsde/paths.hpp"
#include "deepbsde/rng.hpp"

namespace deepbsde {

/// All trainables: the scalar initial value y0, one value network per time
/// step (the U family, output 1) and one compensator network per step
/// (the V family, output 1).
struct NetworkStack {
    Tensor y0{1, 1};
    std::vector<MlpParams> u_nets;
    std::vector<MlpParams> v_nets;

    int n_steps() const { return static_cast<int>(u_nets.size()); }
};

/// Stable flat order of trainables: y0, then U nets, then V nets; within
/// a net all weights then all biases. Adam state and gradient collection
/// both key off this order.
inline std::vector<Tensor*> stack_parameters(NetworkStack& stack) {
    std::vector<Tensor*> out;
    out.push_back(&stack.y0);
    for (auto* family : {&stack.u_nets, &stack.v_nets})
        for (auto& net : *family) {
            for (auto& w : net.weights) out.push_back(&w);
            for (auto& b : net.biases) out.push_back(&b);
        }
    return out;
}

inline int default_hidden_width(const FbsdeProblem& problem) {
    const int d = problem.dimension();
    return problem.preset_name == "basket_call" ? d + 20 : d + 1;
}

struct SolverConfig {
    int batch_size = 64;
    std::int64_t iterations = 8000;
    std::uint64_t seed = 0;
    std::vector<std::int64_t> log_steps;                    // empty: table-style default
    std::vector<std::pair<std::int64_t, double>> lr_steps;  // empty: 1e-2 then 1e-3 at half
    int hidden_width = 0;                                   // 0: preset default
    int hidden_layers = 2;
    int workers = 1;

    void validate() const {
        if (batch_size < 1) throw std::invalid_argument("SolverConfig: batch_size >= 1");
        if (iterations < 1) throw std::invalid_argument("SolverConfig: iterations >= 1");
        if (hidden_layers < 0) throw std::invalid_argument("SolverConfig: hidden_layers >= 0");
    }
};

inline std::vector<std::int64_t> default_log_steps(std::int64_t iterations) {
    std::vector<std::int64_t> steps{0};
    for (std::int64_t s : {std::int64_t{100}, std::int64_t{500}})
        if (s < iterations) steps.push_back(s);
    for (std::int64_t s = 1000; s < iterations; s += 1000) steps.push_back(s);
    steps.push_back(iterations);
    return steps;
}

inline LrSchedule default_lr_schedule(std::int64_t iterations) {
    return LrSchedule{{{0, 1e-2}, {iterations / 2, 1e-3}}};
}

struct TrainReport {
    struct Row {
        std::int64_t step;
        double loss;
        double y0;
        double elapsed_s;
    };
    std::vector<Row> rows;
    double final_y0 = 0.0;
    std::uint64_t seed = 0;
    std::int64_t iterations = 0;
    int batch_size = 0;
    int n_steps = 0;
    std::string generator = RngStream::generator_name;
};

/// Thrown when the training loss stops being finite; carries the partial
/// report so callers can still persist what happened.
class TrainingAbort : public std::runtime_error {
public:
    TrainingAbort(std::int64_t iteration, double loss, double grad_norm, TrainReport partial)
        : std::runtime_error("training aborted at iteration " + std::to_string(iteration) +
                             ": loss=" + std::to_string(loss) +
                             ", grad_norm=" + std::to_string(grad_norm)),
          iteration(iteration), loss(loss), grad_norm(grad_norm), partial(std::move(partial)) {}

    std::int64_t iteration;
    double loss;
    double grad_norm;
    TrainReport partial;
};

inline NetworkStack init_network_stack(const FbsdeProblem& problem, const SolverConfig& config) {
    MlpArchitecture arch;
    arch.input_dim = problem.dimension();
    arch.hidden_width =
        config.hidden_width > 0 ? config.hidden_width : default_hidden_width(problem);
    arch.hidden_layers = config.hidden_layers;
    NetworkStack stack;
    stack.y0 = Tensor::scalar(0.0);
    for (int n = 0; n < problem.n_steps; ++n) {
        RngStream u_rng = make_stream(config.seed, StreamRole::net_init, 2 * n);
        RngStream v_rng = make_stream(config.seed, StreamRole::net_init, 2 * n + 1);
        stack.u_nets.push_back(init_mlp_params(u_rng, arch));
        stack.v_nets.push_back(init_mlp_params(v_rng, arch));
    }
    return stack;
}

/// The rollout graph and the parameter node ids in stack_parameters order.
struct Rollout {
    Graph graph;
    NodeId loss = -1;
    std::vector<NodeId> param_nodes;
};

/// Builds the discretized control-problem objective on a simulated batch:
///   Y_{n+1} = Y_n - f(t_n, X_n, Y_n, sigma^T grad U_n, V_n) dt
///             + (grad U_n)^T sigma(X_n) dW_n
///             + sum_i [U_n(X_n + jump_i) - U_n(X_n)] - dt V_n(X_n)
/// and loss = mean (g(X_M) - Y_M)^2
///          + sum_n mean (sum_i [U_n(..) - U_n(X_n)] - dt V_n(X_n))^2.
inline Rollout build_rollout(const FbsdeProblem& problem, const NetworkStack& stack,
                             const PathBatch& batch) {
    if (stack.n_steps() != problem.n_steps || batch.n_steps != problem.n_steps ||
        batch.d != problem.dimension())
        throw std::invalid_argument("build_rollout: problem, stack and batch shapes disagree");
    const int B = batch.batch;
    const int d = batch.d;
    const double dt = problem.dt();

    Rollout ro;
    Graph& g = ro.graph;
    g.reserve(64 + static_cast<std::size_t>(problem.n_steps) * 40);

    const NodeId y0_node = g.parameter(stack.y0);
    ro.param_nodes.push_back(y0_node);
    std::vector<MlpNodeRefs> u_refs(problem.n_steps), v_refs(problem.n_steps);
    const auto register_family = [&](const std::vector<MlpParams>& family,
                                     std::vector<MlpNodeRefs>& refs) {
        for (int n = 0; n < problem.n_steps; ++n) {
            refs[n] = register_mlp(g, family[n]);
            for (NodeId id : refs[n].weights) ro.param_nodes.push_back(id);
            for (NodeId id : refs[n].biases) ro.param_nodes.push_back(id);
        }
    };
    register_family(stack.u_nets, u_refs);
    register_family(stack.v_nets, v_refs);

    const NodeId ones_batch = g.constant(Tensor::ones(B, 1));
    NodeId y_cur = g.matmul(ones_batch, y0_node); // broadcast the scalar to [B,1]
    NodeId penalty_sum = -1;

    std::vector<double> diag(d);
    for (int n = 0; n < problem.n_steps; ++n) {
        Tensor x_tensor(B, d);
        for (int p = 0; p < B; ++p)
            std::copy(batch.state(p, n), batch.state(p, n) + d, &x_tensor.at(p, 0));
        const NodeId x_node = g.constant(x_tensor);

        const MlpForward u_fwd = mlp_forward(g, u_refs[n], x_node);
        const NodeId grad_u = mlp_input_gradient(g, u_refs[n], u_fwd, x_node);
        const MlpForward v_fwd = mlp_forward(g, v_refs[n], x_node);

        // sigma(X_n) dW_n, per path and asset, entering as data
        Tensor sigma_dw(B, d);
        for (int p = 0; p < B; ++p) {
            problem.diffusion_diag(batch.state(p, n), diag.data());
            const double* dwp = batch.brownian(p, n);
            for (int j = 0; j < d; ++j) sigma_dw.at(p, j) = diag[j] * dwp[j];
        }
        const NodeId z_dw =
            g.sum(g.elementwise_mul(grad_u, g.constant(std::move(sigma_dw))), SumAxis::rows);

        // compensated jump increment: sum_i [U(X + jump) - U(X)] - dt V(X)
        std::vector<int> owners;
        std::vector<double> shifted;
        for (int p = 0; p < B; ++p) {
            for (const JumpEvent& e : batch.events_at(p, n)) {
                const double* xp = batch.state(p, n);
                const std::size_t row = shifted.size();
                shifted.resize(row + d);
                std::copy(xp, xp + d, shifted.begin() + row);
                shifted[row + e.asset] = FbsdeProblem::apply_jump(xp[e.asset], e.mark);
                owners.push_back(p);
            }
        }
        NodeId comp;
        if (!owners.empty()) {
            const int K = static_cast<int>(owners.size());
            const NodeId shifted_node = g.constant(Tensor(K, d, std::move(shifted)));
            const MlpForward u_shift = mlp_forward(g, u_refs[n], shifted_node);
            const NodeId base_at_owner = g.gather_rows(u_fwd.output, owners);
            const NodeId diff = g.add_broadcast(u_shift.output, g.scale(base_at_owner, -1.0));
            Tensor indicator(B, K);
            for (int k = 0; k < K; ++k) indicator.at(owners[k], k) = 1.0;
            const NodeId jump_sum = g.matmul(g.constant(std::move(indicator)), diff);
            comp = g.add_broadcast(jump_sum, g.scale(v_fwd.output, -dt));
        } else {
            comp = g.scale(v_fwd.output, -dt);
        }
        const NodeId penalty = g.scale(g.sum(g.square(comp), SumAxis::all), 1.0 / B);
        penalty_sum = penalty_sum < 0 ? penalty : g.add_broadcast(penalty_sum, penalty);

        NodeId y_next = g.add_broadcast(g.add_broadcast(y_cur, z_dw), comp);
        if (problem.driver) {
            Tensor sigma_diag(B, d);
            for (int p = 0; p < B; ++p) {
                problem.diffusion_diag(batch.state(p, n), diag.data());
                for (int j = 0; j < d; ++j) sigma_diag.at(p, j) = diag[j];
            }
            const NodeId z_node = g.elementwise_mul(grad_u, g.constant(std::move(sigma_diag)));
            const NodeId f_node =
                problem.driver(g, n * dt, x_tensor, y_cur, z_node, v_fwd.output);
            y_next = g.add_broadcast(y_next, g.scale(f_node, -dt));
        }
        y_cur = y_next;
    }

    Tensor terminal(B, 1);
    for (int p = 0; p < B; ++p)
        terminal.data[p] = problem.terminal(batch.state(p, problem.n_steps), d);
    const NodeId resid = g.add_broadcast(g.constant(std::move(terminal)), g.scale(y_cur, -1.0));
    const NodeId terminal_term = g.scale(g.sum(g.square(resid), SumAxis::all), 1.0 / B);
    ro.loss = g.add_broadcast(terminal_term, penalty_sum);
    return ro;
}

inline double evaluate_y0(const NetworkStack& stack) { return stack.y0.data[0]; }

/// Loss of a frozen stack on a given batch (no gradients).
inline double evaluate_loss(const FbsdeProblem& problem, const NetworkStack& stack,
                            const PathBatch& batch) {
    Rollout ro = build_rollout(problem, stack, batch);
    return ro.graph.value(ro.loss).data[0];
}

struct TrainResult {
    TrainReport report;
    NetworkStack stack;
};

/// SGD training loop: fresh path batch per iteration, full backward pass,
/// Adam on every trainable including y0.
inline TrainResult train(const FbsdeProblem& problem, const SolverConfig& config) {
    problem.validate();
    config.validate();
    NetworkStack stack = init_network_stack(problem, config);
    std::vector<Tensor*> params = stack_parameters(stack);
    LrSchedule schedule = config.lr_steps.empty() ? default_lr_schedule(config.iterations)
                                                  : LrSchedule{config.lr_steps};
    AdamState adam(params, schedule);

    std::vector<std::int64_t> log_steps =
        config.log_steps.empty() ? default_log_steps(config.iterations) : config.log_steps;
    const auto should_log = [&](std::int64_t step) {
        for (std::int64_t s : log_steps)
            if (s == step) return true;
        return false;
    };

    TrainReport report;
    report.seed = config.seed;
    report.iterations = config.iterations;
    report.batch_size = config.batch_size;
    report.n_steps = problem.n_steps;

    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    std::vector<Tensor> grads(params.size());
    for (std::int64_t iter = 1; iter <= config.iterations; ++iter) {
        StreamDomain domain{config.seed, StreamRole::path_sim,
                            static_cast<std::uint64_t>(iter - 1) *
                                static_cast<std::uint64_t>(config.batch_size)};
        const PathBatch batch = simulate(problem, domain, config.batch_size, config.workers);
        Rollout ro = build_rollout(problem, stack, batch);
        const double loss = ro.graph.value(ro.loss).data[0];
        if (iter == 1 && should_log(0))
            report.rows.push_back({0, loss, evaluate_y0(stack), elapsed()});

        ro.graph.backward(ro.loss);
        double grad_norm_sq = 0.0;
        for (std::size_t i = 0; i < params.size(); ++i) {
            grads[i] = ro.graph.gradient(ro.param_nodes[i]);
            for (double v : grads[i].data) grad_norm_sq += v * v;
        }
        if (!std::isfinite(loss) || !std::isfinite(grad_norm_sq)) {
            report.final_y0 = evaluate_y0(stack);
            throw TrainingAbort(iter, loss, std::sqrt(grad_norm_sq), report);
        }
        adam.step(params, grads);
        if (should_log(iter))
            report.rows.push_back({iter, loss, evaluate_y0(stack), elapsed()});
    }
    report.final_y0 = evaluate_y0(stack);
    return {std::move(report), std::move(stack)};
}

} // namespace deepbsde
