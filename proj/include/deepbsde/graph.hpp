#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "deepbsde/tensor.hpp"

namespace deepbsde {

using NodeId = std::int32_t;

enum class OpKind : std::uint8_t {
    constant,
    parameter,
    matmul,
    add_broadcast,
    sigmoid,
    elementwise_mul,
    sum,
    square,
    scale,
    concat_rows,
    gather_rows,
};

enum class SumAxis : std::uint8_t { all, rows }; // rows: sum across columns -> [r,1]

/// Append-only reverse-mode tape over dense tensors. Forward values are
/// computed eagerly on construction (inputs always precede a node), one
/// backward pass fills gradients for everything reachable from the loss.
class Graph {
public:
    struct Node {
        OpKind kind;
        NodeId in0 = -1;
        NodeId in1 = -1;
        bool trans_b = false;   // matmul: use B transposed
        SumAxis axis = SumAxis::all;
        double factor = 1.0;    // scale
        std::vector<int> indices; // gather_rows
        Tensor value;
        Tensor grad;            // allocated lazily during backward
        bool has_grad = false;
    };

    void reserve(std::size_t n) { nodes_.reserve(n); }
    std::size_t size() const { return nodes_.size(); }

    const Tensor& value(NodeId id) const { return nodes_[id].value; }

    /// Gradient of the last backward()'s loss w.r.t. node `id`;
    /// zeros when the node is not reachable from the loss.
    Tensor gradient(NodeId id) const {
        const Node& n = nodes_[id];
        if (n.has_grad) return n.grad;
        return Tensor(n.value.rows, n.value.cols);
    }

    NodeId constant(Tensor v) { return push(OpKind::constant, std::move(v)); }
    NodeId parameter(Tensor v) { return push(OpKind::parameter, std::move(v)); }

    NodeId matmul(NodeId a, NodeId b, bool trans_b = false) {
        const Tensor& ta = val(a);
        const Tensor& tb = val(b);
        const int inner_b = trans_b ? tb.cols : tb.rows;
        if (ta.cols != inner_b)
            throw std::invalid_argument("matmul: inner dimensions do not match");
        const int out_cols = trans_b ? tb.rows : tb.cols;
        Tensor out(ta.rows, out_cols);
        matmul_kernel(ta, tb, trans_b, out, false);
        Node n = make(OpKind::matmul, a, b, std::move(out));
        n.trans_b = trans_b;
        return push(std::move(n));
    }

    /// a + b where b is same-shape, a [1,cols] row vector, or a [1,1] scalar.
    NodeId add_broadcast(NodeId a, NodeId b) {
        const Tensor& ta = val(a);
        const Tensor& tb = val(b);
        Tensor out = ta;
        if (tb.rows == ta.rows && tb.cols == ta.cols) {
            for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += tb.data[i];
        } else if (tb.rows == 1 && tb.cols == ta.cols) {
            for (int r = 0; r < ta.rows; ++r)
                for (int c = 0; c < ta.cols; ++c) out.at(r, c) += tb.data[c];
        } else if (tb.rows == 1 && tb.cols == 1) {
            for (auto& v : out.data) v += tb.data[0];
        } else {
            throw std::invalid_argument("add_broadcast: incompatible shapes");
        }
        return push(make(OpKind::add_broadcast, a, b, std::move(out)));
    }

    NodeId sigmoid(NodeId a) {
        Tensor out = val(a);
        for (auto& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
        return push(make(OpKind::sigmoid, a, -1, std::move(out)));
    }

    NodeId elementwise_mul(NodeId a, NodeId b) {
        const Tensor& ta = val(a);
        const Tensor& tb = val(b);
        if (!ta.same_shape(tb))
            throw std::invalid_argument("elementwise_mul: shapes differ");
        Tensor out = ta;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= tb.data[i];
        return push(make(OpKind::elementwise_mul, a, b, std::move(out)));
    }

    NodeId sum(NodeId a, SumAxis axis = SumAxis::all) {
        const Tensor& ta = val(a);
        Tensor out;
        if (axis == SumAxis::all) {
            out = Tensor(1, 1);
            for (double v : ta.data) out.data[0] += v;
        } else {
            out = Tensor(ta.rows, 1);
            for (int r = 0; r < ta.rows; ++r) {
                double acc = 0.0;
                for (int c = 0; c < ta.cols; ++c) acc += ta.at(r, c);
                out.data[r] = acc;
            }
        }
        Node n = make(OpKind::sum, a, -1, std::move(out));
        n.axis = axis;
        return push(std::move(n));
    }

    NodeId square(NodeId a) {
        Tensor out = val(a);
        for (auto& v : out.data) v *= v;
        return push(make(OpKind::square, a, -1, std::move(out)));
    }

    NodeId scale(NodeId a, double k) {
        Tensor out = val(a);
        for (auto& v : out.data) v *= k;
        Node n = make(OpKind::scale, a, -1, std::move(out));
        n.factor = k;
        return push(std::move(n));
    }

    NodeId concat_rows(NodeId a, NodeId b) {
        const Tensor& ta = val(a);
        const Tensor& tb = val(b);
        if (ta.cols != tb.cols)
            throw std::invalid_argument("concat_rows: column counts differ");
        Tensor out(ta.rows + tb.rows, ta.cols);
        std::copy(ta.data.begin(), ta.data.end(), out.data.begin());
        std::copy(tb.data.begin(), tb.data.end(), out.data.begin() + ta.data.size());
        return push(make(OpKind::concat_rows, a, b, std::move(out)));
    }

    NodeId gather_rows(NodeId a, std::vector<int> indices) {
        const Tensor& ta = val(a);
        Tensor out(static_cast<int>(indices.size()), ta.cols);
        for (std::size_t i = 0; i < indices.size(); ++i) {
            if (indices[i] < 0 || indices[i] >= ta.rows)
                throw std::invalid_argument("gather_rows: index out of range");
            for (int c = 0; c < ta.cols; ++c)
                out.at(static_cast<int>(i), c) = ta.at(indices[i], c);
        }
        Node n = make(OpKind::gather_rows, a, -1, std::move(out));
        n.indices = std::move(indices);
        return push(std::move(n));
    }

    /// Reverse sweep from a scalar loss node. Gradients accumulate in node
    /// id order, so the result is deterministic across runs.
    void backward(NodeId loss) {
        Node& top = nodes_[loss];
        if (top.value.rows != 1 || top.value.cols != 1)
            throw std::invalid_argument("backward: loss node must be scalar");
        for (auto& n : nodes_) {
            n.has_grad = false;
            n.grad = Tensor();
        }
        touch_grad(loss).data[0] = 1.0;
        for (NodeId id = static_cast<NodeId>(nodes_.size()) - 1; id >= 0; --id) {
            if (!nodes_[id].has_grad) continue;
            propagate(id);
        }
    }

    /// Re-runs every forward kernel in id order against current node values.
    /// Used for replay checks and finite-difference probes on parameters.
    void recompute_forward() {
        for (auto& n : nodes_) recompute(n);
    }

    Tensor& mutable_value(NodeId id) { return nodes_[id].value; }

private:
    const Tensor& val(NodeId id) const {
        if (id < 0 || id >= static_cast<NodeId>(nodes_.size()))
            throw std::invalid_argument("graph: bad node id " + std::to_string(id));
        return nodes_[id].value;
    }

    static Node make(OpKind kind, NodeId a, NodeId b, Tensor v) {
        Node n;
        n.kind = kind;
        n.in0 = a;
        n.in1 = b;
        n.value = std::move(v);
        return n;
    }

    NodeId push(OpKind kind, Tensor v) { return push(make(kind, -1, -1, std::move(v))); }

    NodeId push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<NodeId>(nodes_.size()) - 1;
    }

    Tensor& touch_grad(NodeId id) {
        Node& n = nodes_[id];
        if (!n.has_grad) {
            n.grad = Tensor(n.value.rows, n.value.cols);
            n.has_grad = true;
        }
        return n.grad;
    }

    // C = A * B (or A * B^T); accumulate adds into C instead of overwriting.
    static void matmul_kernel(const Tensor& a, const Tensor& b, bool trans_b,
                              Tensor& out, bool accumulate) {
        if (!accumulate)
            std::fill(out.data.begin(), out.data.end(), 0.0);
        if (!trans_b) {
            for (int i = 0; i < a.rows; ++i) {
                const double* arow = &a.data[static_cast<std::size_t>(i) * a.cols];
                double* crow = &out.data[static_cast<std::size_t>(i) * out.cols];
                for (int l = 0; l < a.cols; ++l) {
                    const double av = arow[l];
                    if (av == 0.0) continue;
                    const double* brow = &b.data[static_cast<std::size_t>(l) * b.cols];
                    for (int j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
                }
            }
        } else {
            for (int i = 0; i < a.rows; ++i) {
                const double* arow = &a.data[static_cast<std::size_t>(i) * a.cols];
                double* crow = &out.data[static_cast<std::size_t>(i) * out.cols];
                for (int j = 0; j < b.rows; ++j) {
                    const double* brow = &b.data[static_cast<std::size_t>(j) * b.cols];
                    double acc = 0.0;
                    for (int l = 0; l < a.cols; ++l) acc += arow[l] * brow[l];
                    crow[j] += acc;
                }
            }
        }
    }

    // C = A^T * B, accumulated.
    static void matmul_at_b(const Tensor& a, const Tensor& b, Tensor& out) {
        for (int l = 0; l < a.rows; ++l) {
            const double* arow = &a.data[static_cast<std::size_t>(l) * a.cols];
            const double* brow = &b.data[static_cast<std::size_t>(l) * b.cols];
            for (int i = 0; i < a.cols; ++i) {
                const double av = arow[i];
                if (av == 0.0) continue;
                double* crow = &out.data[static_cast<std::size_t>(i) * out.cols];
                for (int j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
            }
        }
    }

    void propagate(NodeId id) {
        Node& n = nodes_[id];
        const Tensor& g = n.grad;
        switch (n.kind) {
        case OpKind::constant:
        case OpKind::parameter:
            break;
        case OpKind::matmul: {
            const Tensor& a = nodes_[n.in0].value;
            const Tensor& b = nodes_[n.in1].value;
            Tensor& da = touch_grad(n.in0);
            Tensor& db = touch_grad(n.in1);
            if (!n.trans_b) {
                matmul_kernel(g, b, /*trans_b=*/true, da, /*accumulate=*/true); // dA += G B^T
                matmul_at_b(a, g, db);                                          // dB += A^T G
            } else {
                matmul_kernel(g, b, /*trans_b=*/false, da, /*accumulate=*/true); // dA += G B
                matmul_at_b(g, a, db);                                           // dB += G^T A
            }
            break;
        }
        case OpKind::add_broadcast: {
            Tensor& da = touch_grad(n.in0);
            Tensor& db = touch_grad(n.in1);
            for (std::size_t i = 0; i < g.size(); ++i) da.data[i] += g.data[i];
            if (db.same_shape(g)) {
                for (std::size_t i = 0; i < g.size(); ++i) db.data[i] += g.data[i];
            } else if (db.rows == 1 && db.cols == g.cols) {
                for (int r = 0; r < g.rows; ++r)
                    for (int c = 0; c < g.cols; ++c) db.data[c] += g.at(r, c);
            } else { // scalar
                for (double v : g.data) db.data[0] += v;
            }
            break;
        }
        case OpKind::sigmoid: {
            Tensor& da = touch_grad(n.in0);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double s = n.value.data[i];
                da.data[i] += g.data[i] * s * (1.0 - s);
            }
            break;
        }
        case OpKind::elementwise_mul: {
            const Tensor& a = nodes_[n.in0].value;
            const Tensor& b = nodes_[n.in1].value;
            Tensor& da = touch_grad(n.in0);
            Tensor& db = touch_grad(n.in1);
            for (std::size_t i = 0; i < g.size(); ++i) {
                da.data[i] += g.data[i] * b.data[i];
                db.data[i] += g.data[i] * a.data[i];
            }
            break;
        }
        case OpKind::sum: {
            Tensor& da = touch_grad(n.in0);
            if (n.axis == SumAxis::all) {
                for (auto& v : da.data) v += g.data[0];
            } else {
                for (int r = 0; r < da.rows; ++r)
                    for (int c = 0; c < da.cols; ++c) da.at(r, c) += g.data[r];
            }
            break;
        }
        case OpKind::square: {
            const Tensor& a = nodes_[n.in0].value;
            Tensor& da = touch_grad(n.in0);
            for (std::size_t i = 0; i < g.size(); ++i)
                da.data[i] += 2.0 * a.data[i] * g.data[i];
            break;
        }
        case OpKind::scale: {
            Tensor& da = touch_grad(n.in0);
            for (std::size_t i = 0; i < g.size(); ++i) da.data[i] += n.factor * g.data[i];
            break;
        }
        case OpKind::concat_rows: {
            Tensor& da = touch_grad(n.in0);
            Tensor& db = touch_grad(n.in1);
            std::size_t split = da.size();
            for (std::size_t i = 0; i < split; ++i) da.data[i] += g.data[i];
            for (std::size_t i = 0; i < db.size(); ++i) db.data[i] += g.data[split + i];
            break;
        }
        case OpKind::gather_rows: {
            Tensor& da = touch_grad(n.in0);
            for (std::size_t i = 0; i < n.indices.size(); ++i)
                for (int c = 0; c < g.cols; ++c)
                    da.at(n.indices[i], c) += g.at(static_cast<int>(i), c);
            break;
        }
        }
    }

    void recompute(Node& n) {
        switch (n.kind) {
        case OpKind::constant:
        case OpKind::parameter:
            break;
        case OpKind::matmul:
            matmul_kernel(nodes_[n.in0].value, nodes_[n.in1].value, n.trans_b, n.value, false);
            break;
        case OpKind::add_broadcast: {
            const Tensor& a = nodes_[n.in0].value;
            const Tensor& b = nodes_[n.in1].value;
            n.value = a;
            if (b.same_shape(a)) {
                for (std::size_t i = 0; i < a.size(); ++i) n.value.data[i] += b.data[i];
            } else if (b.rows == 1 && b.cols == a.cols) {
                for (int r = 0; r < a.rows; ++r)
                    for (int c = 0; c < a.cols; ++c) n.value.at(r, c) += b.data[c];
            } else {
                for (auto& v : n.value.data) v += b.data[0];
            }
            break;
        }
        case OpKind::sigmoid: {
            const Tensor& a = nodes_[n.in0].value;
            for (std::size_t i = 0; i < a.size(); ++i)
                n.value.data[i] = 1.0 / (1.0 + std::exp(-a.data[i]));
            break;
        }
        case OpKind::elementwise_mul: {
            const Tensor& a = nodes_[n.in0].value;
            const Tensor& b = nodes_[n.in1].value;
            for (std::size_t i = 0; i < a.size(); ++i) n.value.data[i] = a.data[i] * b.data[i];
            break;
        }
        case OpKind::sum: {
            const Tensor& a = nodes_[n.in0].value;
            if (n.axis == SumAxis::all) {
                double acc = 0.0;
                for (double v : a.data) acc += v;
                n.value.data[0] = acc;
            } else {
                for (int r = 0; r < a.rows; ++r) {
                    double acc = 0.0;
                    for (int c = 0; c < a.cols; ++c) acc += a.at(r, c);
                    n.value.data[r] = acc;
                }
            }
            break;
        }
        case OpKind::square: {
            const Tensor& a = nodes_[n.in0].value;
            for (std::size_t i = 0; i < a.size(); ++i) n.value.data[i] = a.data[i] * a.data[i];
            break;
        }
        case OpKind::scale: {
            const Tensor& a = nodes_[n.in0].value;
            for (std::size_t i = 0; i < a.size(); ++i) n.value.data[i] = n.factor * a.data[i];
            break;
        }
        case OpKind::concat_rows: {
            const Tensor& a = nodes_[n.in0].value;
            const Tensor& b = nodes_[n.in1].value;
            std::copy(a.data.begin(), a.data.end(), n.value.data.begin());
            std::copy(b.data.begin(), b.data.end(), n.value.data.begin() + a.data.size());
            break;
        }
        case OpKind::gather_rows: {
            const Tensor& a = nodes_[n.in0].value;
            for (std::size_t i = 0; i < n.indices.size(); ++i)
                for (int c = 0; c < a.cols; ++c)
                    n.value.at(static_cast<int>(i), c) = a.at(n.indices[i], c);
            break;
        }
        }
    }

    std::vector<Node> nodes_;
};

} // namespace deepbsde
