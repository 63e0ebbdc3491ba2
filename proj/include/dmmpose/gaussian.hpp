#pragma once

#include "dmmpose/autodiff.hpp"
#include "dmmpose/tensor.hpp"

namespace dmmpose {

// Floor on every variance produced by a network head.
inline constexpr double kVarianceFloor = 1e-4;
// log(kVarianceFloor), the clamp applied to log-variance heads.
double log_variance_floor();
// Ceiling on transition variances, so long rollouts stay finite.
inline constexpr double kTransitionVarianceCeiling = 1e4;

// Diagonal Gaussian stored as mean and per-dimension log-variance.
struct DiagGaussian {
  Vector mean;
  Vector log_var;

  DiagGaussian() = default;
  DiagGaussian(Vector m, Vector lv);

  static DiagGaussian standard(Eigen::Index dim);
  Eigen::Index dim() const { return mean.size(); }
  Vector variance() const { return log_var.array().exp().matrix(); }
};

double gaussian_log_pdf(const Vector& x, const DiagGaussian& g);
double gaussian_kl(const DiagGaussian& q, const DiagGaussian& p);
Vector reparam_sample(const DiagGaussian& g, const Vector& eps);

// Batched Gaussian living on a tape: one distribution per row.
struct GaussianVar {
  Var mean;
  Var log_var;

  Eigen::Index rows() const { return mean.rows(); }
  Eigen::Index dim() const { return mean.cols(); }
  // Row `r` as a plain DiagGaussian.
  DiagGaussian row(Eigen::Index r) const;
};

}  // namespace dmmpose
