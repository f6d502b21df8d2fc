#pragma once

#include <cmath>
#include <vector>

#include "oul/core/error.hpp"
#include "oul/nn/tensor.hpp"

namespace oul::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias-corrected first and second moment estimates.
template <typename S>
class Adam {
 public:
  Adam(std::vector<Param<S>*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
    for (auto* p : params_) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& p = *params_[k];
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double g = p.grad[i];
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m[i] / c1, vhat = v[i] / c2;
        p.value[i] = static_cast<S>(p.value[i] - cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.eps));
      }
    }
  }

  long steps() const noexcept { return t_; }

 private:
  std::vector<Param<S>*> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

}  // namespace oul::nn
