#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gswe/tensor.hpp"

namespace gswe {

/// Adam with bias correction. State is allocated lazily on the first step
/// and keyed by parameter order, which must stay stable across steps.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

  void step(const std::vector<Tensor*>& params,
            const std::vector<Tensor>& grads) {
    if (params.size() != grads.size()) {
      throw std::invalid_argument("Adam: parameter/gradient count mismatch");
    }
    if (m_.empty()) {
      for (auto* p : params) {
        m_.emplace_back(p->shape());
        v_.emplace_back(p->shape());
      }
    }
    if (m_.size() != params.size()) {
      throw std::invalid_argument("Adam: parameter set changed between steps");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor& p = *params[i];
      const Tensor& g = grads[i];
      for (std::size_t j = 0; j < p.size(); ++j) {
        m_[i][j] = b1_ * m_[i][j] + (1.0 - b1_) * g[j];
        v_[i][j] = b2_ * v_[i][j] + (1.0 - b2_) * g[j] * g[j];
        const double mhat = m_[i][j] / c1;
        const double vhat = v_[i][j] / c2;
        p[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  double learning_rate() const { return lr_; }

 private:
  double lr_, b1_, b2_, eps_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace gswe
