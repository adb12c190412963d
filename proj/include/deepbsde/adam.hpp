#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "deepbsde/tensor.hpp"

namespace deepbsde {

/// Piecewise-constant learning-rate schedule: (from_step, lr) entries,
/// sorted by step; the last entry at or below the current step applies.
struct LrSchedule {
    std::vector<std::pair<std::int64_t, double>> entries{{0, 1e-2}};

    double at(std::int64_t step) const {
        double lr = entries.front().second;
        for (const auto& [from, value] : entries)
            if (from <= step) lr = value;
        return lr;
    }
};

/// Adam with bias correction over a fixed list of parameter tensors.
class AdamState {
public:
    AdamState(const std::vector<Tensor*>& params, LrSchedule schedule,
              double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : schedule_(std::move(schedule)), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (const Tensor* p : params) {
            m_.emplace_back(p->rows, p->cols);
            v_.emplace_back(p->rows, p->cols);
        }
    }

    std::int64_t step_count() const { return step_; }
    double current_lr() const { return schedule_.at(step_); }

    void step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads) {
        if (params.size() != m_.size() || grads.size() != m_.size())
            throw std::invalid_argument("AdamState::step: parameter list changed size");
        const double lr = schedule_.at(step_);
        ++step_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor& p = *params[i];
            const Tensor& g = grads[i];
            if (!p.same_shape(g))
                throw std::invalid_argument("AdamState::step: gradient shape mismatch");
            for (std::size_t j = 0; j < p.size(); ++j) {
                double& m = m_[i].data[j];
                double& v = v_[i].data[j];
                m = beta1_ * m + (1.0 - beta1_) * g.data[j];
                v = beta2_ * v + (1.0 - beta2_) * g.data[j] * g.data[j];
                p.data[j] -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps_);
            }
        }
    }

private:
    LrSchedule schedule_;
    double beta1_, beta2_, eps_;
    std::int64_t step_ = 0;
    std::vector<Tensor> m_, v_;
};

} // namespace deepbsde
