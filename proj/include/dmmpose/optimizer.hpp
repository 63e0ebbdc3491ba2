#pragma once

#include "dmmpose/params.hpp"

#include <cstddef>

namespace dmmpose {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Gradients are rescaled so their global norm never exceeds this.
  double clip_norm = 10.0;
};

// Adaptive-moment optimizer with global-norm clipping. Minimizes: callers
// maximizing an objective pass the gradient of its negation.
class Adam {
 public:
  Adam(const ParamSet& params, AdamConfig config = {});

  // Throws std::runtime_error naming the first parameter with a non-finite
  // gradient; parameters are left untouched in that case.
  void step(ParamSet& params, Gradients grads);

  // Clipping as applied by step(); returns the pre-clip norm.
  double clip(Gradients& grads) const;

  std::size_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  const Gradients& first_moment() const { return m_; }
  const Gradients& second_moment() const { return v_; }

 private:
  AdamConfig config_;
  Gradients m_;
  Gradients v_;
  std::size_t steps_ = 0;
};

}  // namespace dmmpose
