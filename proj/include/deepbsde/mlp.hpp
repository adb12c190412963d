#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "deepbsde/graph.hpp"
#include "deepbsde/rng.hpp"
#include "deepbsde/tensor.hpp"

namespace deepbsde {

/// Feedforward net shape: input_dim -> hidden_width x hidden_layers -> 1,
/// sigmoid activations on the hidden layers, affine output.
struct MlpArchitecture {
    int input_dim = 1;
    int hidden_width = 2;
    int hidden_layers = 2;

    int affine_layers() const { return hidden_layers + 1; }
    int layer_in(int layer) const { return layer == 0 ? input_dim : hidden_width; }
    int layer_out(int layer) const { return layer == affine_layers() - 1 ? 1 : hidden_width; }
};

/// One network's parameters. weights[l] is stored [in,out] so the batch
/// forward pass is x * W + b on row-major batches.
struct MlpParams {
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;

    MlpArchitecture architecture() const {
        MlpArchitecture a;
        a.input_dim = weights.front().rows;
        a.hidden_width = weights.front().cols;
        a.hidden_layers = static_cast<int>(weights.size()) - 1;
        if (a.hidden_layers == 0) a.hidden_width = 0;
        return a;
    }
    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& w : weights) n += w.size();
        for (const auto& b : biases) n += b.size();
        return n;
    }
};

/// Weights ~ N(0, 1/fan_in), biases zero.
inline MlpParams init_mlp_params(RngStream& rng, const MlpArchitecture& arch) {
    if (arch.input_dim < 1 || arch.hidden_layers < 0 ||
        (arch.hidden_layers > 0 && arch.hidden_width < 1))
        throw std::invalid_argument("init_mlp_params: invalid architecture");
    MlpParams p;
    for (int l = 0; l < arch.affine_layers(); ++l) {
        const int fan_in = arch.layer_in(l);
        const int fan_out = arch.layer_out(l);
        Tensor w(fan_in, fan_out);
        const double sd = std::sqrt(1.0 / fan_in);
        for (auto& v : w.data) v = sd * rng.normal();
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(1, fan_out);
    }
    return p;
}

/// Parameter node ids of one registered network inside a graph.
struct MlpNodeRefs {
    std::vector<NodeId> weights;
    std::vector<NodeId> biases;
};

inline MlpNodeRefs register_mlp(Graph& g, const MlpParams& p) {
    MlpNodeRefs refs;
    for (const auto& w : p.weights) refs.weights.push_back(g.parameter(w));
    for (const auto& b : p.biases) refs.biases.push_back(g.parameter(b));
    return refs;
}

/// Forward evaluation; keeps the hidden sigmoid nodes so the analytic
/// input gradient can reuse them.
struct MlpForward {
    NodeId output = -1;
    std::vector<NodeId> hidden; // sigmoid outputs, one per hidden layer
};

inline MlpForward mlp_forward(Graph& g, const MlpNodeRefs& net, NodeId x) {
    MlpForward f;
    NodeId h = x;
    const int layers = static_cast<int>(net.weights.size());
    for (int l = 0; l < layers; ++l) {
        h = g.add_broadcast(g.matmul(h, net.weights[l]), net.biases[l]);
        if (l + 1 < layers) {
            h = g.sigmoid(h);
            f.hidden.push_back(h);
        }
    }
    f.output = h;
    return f;
}

/// Gradient of the scalar output w.r.t. the input, batch row by row,
/// expanded into primitive ops:
///   d out / d x = W_1 diag(s_1 (1-s_1)) W_2 ... W_L
/// Because the expansion is itself made of graph primitives, one backward
/// pass over any loss built on it differentiates through to the weights.
inline NodeId mlp_input_gradient(Graph& g, const MlpNodeRefs& net, const MlpForward& fwd,
                                 NodeId x) {
    const int batch = g.value(x).rows;
    const int layers = static_cast<int>(net.weights.size());
    const NodeId one_scalar = g.constant(Tensor::scalar(1.0));
    NodeId r = g.constant(Tensor::ones(batch, 1));
    for (int l = layers - 1; l >= 1; --l) {
        r = g.matmul(r, net.weights[l], /*trans_b=*/true);
        const NodeId s = fwd.hidden[l - 1];
        const NodeId one_minus_s = g.add_broadcast(g.scale(s, -1.0), one_scalar);
        r = g.elementwise_mul(r, g.elementwise_mul(s, one_minus_s));
    }
    return g.matmul(r, net.weights[0], /*trans_b=*/true);
}

} // namespace deepbsde
