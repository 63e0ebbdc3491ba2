#include "dmmpose/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace dmmpose {

Adam::Adam(const ParamSet& params, AdamConfig config)
    : config_(config), m_(zeros_like(params)), v_(zeros_like(params)) {
  if (config_.clip_norm <= 0) throw std::invalid_argument("clip_norm must be positive");
}

double Adam::clip(Gradients& grads) const {
  const double norm = global_norm(grads);
  if (norm > config_.clip_norm) {
    const double s = config_.clip_norm / norm;
    for (auto& g : grads) g *= s;
  }
  return norm;
}

void Adam::step(ParamSet& params, Gradients grads) {
  if (grads.size() != params.size() || m_.size() != params.size())
    throw std::invalid_argument("optimizer: gradient count does not match parameters");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const Tensor& p = params.value(i);
    if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols())
      throw std::invalid_argument("optimizer: gradient shape mismatch for " + params.name(i));
    if (!grads[i].allFinite())
      throw std::runtime_error("optimizer: non-finite gradient for parameter " + params.name(i));
  }
  clip(grads);
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const double lr = config_.learning_rate;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * grads[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * grads[i].cwiseProduct(grads[i]);
    if (lr == 0.0) continue;
    params.value(i).array() -=
        lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.epsilon);
  }
}

}  // namespace dmmpose
