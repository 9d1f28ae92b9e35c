#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "emogene/errors.hpp"
#include "emogene/tensor.hpp"

namespace emogene {

enum class OptimizerKind { Sgd, Adam };

// Plain gradient descent or Adam with bias correction. Moment buffers are
// lazily allocated to match the parameter list on the first step.
template <typename T>
class Optimizer {
public:
    explicit Optimizer(OptimizerKind kind, T lr, T beta1 = T(0.9),
                       T beta2 = T(0.999), T eps = T(1e-8))
        : kind_(kind), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    std::size_t step_count() const { return step_; }
    T learning_rate() const { return lr_; }
    void set_learning_rate(T lr) { lr_ = lr; }

    void step(const std::vector<Tensor<T>*>& params,
              const std::vector<const Tensor<T>*>& grads) {
        if (params.size() != grads.size())
            throw ShapeError("optimizer: param/grad count mismatch");
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (!params[i]->same_shape(*grads[i]))
                throw ShapeError("optimizer: param/grad shape mismatch");
            if (!grads[i]->all_finite())
                throw NumericError("optimizer: non-finite gradient");
        }
        ++step_;
        if (kind_ == OptimizerKind::Sgd) {
            for (std::size_t i = 0; i < params.size(); ++i)
                for (std::size_t j = 0; j < params[i]->size(); ++j)
                    params[i]->data[j] -= lr_ * grads[i]->data[j];
            return;
        }
        if (m_.empty()) {
            for (const auto* p : params) {
                m_.emplace_back(p->shape);
                v_.emplace_back(p->shape);
            }
        }
        const T bc1 = T(1) - std::pow(beta1_, T(step_));
        const T bc2 = T(1) - std::pow(beta2_, T(step_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& m = m_[i];
            auto& v = v_[i];
            for (std::size_t j = 0; j < params[i]->size(); ++j) {
                const T g = grads[i]->data[j];
                m[j] = beta1_ * m[j] + (T(1) - beta1_) * g;
                v[j] = beta2_ * v[j] + (T(1) - beta2_) * g * g;
                const T mhat = m[j] / bc1;
                const T vhat = v[j] / bc2;
                params[i]->data[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

private:
    OptimizerKind kind_;
    T lr_, beta1_, beta2_, eps_;
    std::size_t step_ = 0;
    std::vector<Tensor<T>> m_, v_;
};

}  // namespace emogene
