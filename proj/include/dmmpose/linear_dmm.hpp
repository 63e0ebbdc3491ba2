#pragma once

#include "dmmpose/kalman.hpp"
#include "dmmpose/state_space.hpp"

namespace dmmpose {

// The linear-Gaussian member of the state-space family, used to check the
// ELBO and forecaster against exact Kalman inference.
//
// Generative parameters mirror an LdsSpec with diagonal Q, R and P0. The
// posterior is fitted per sequence of a fixed length T:
//   q(z_1) = N(m_1, exp(lv_1)),  q(z_t | z_{t-1}) = N(z_{t-1} M_t + m_t, exp(lv_t)).
// It ignores the frame values and cannot be amortized across sequences.
class LinearGaussianDmm : public StateSpaceModel {
 public:
  // Throws if Q, R or P0 is not diagonal.
  LinearGaussianDmm(const LdsSpec& spec, int steps);

  Eigen::Index latent_dim() const override { return Z_; }
  Eigen::Index feature_dim() const override { return F_; }
  int steps() const { return steps_; }
  ParamSet& generative() override { return theta_; }
  const ParamSet& generative() const override { return theta_; }
  ParamSet& inference() override { return phi_; }
  const ParamSet& inference() const override { return phi_; }

  GaussianVar initial_prior(Tape& tape, Eigen::Index rows) const override;
  GaussianVar transition(Tape& tape, Var z_prev) const override;
  GaussianVar emission(Tape& tape, Var z) const override;
  LatentPath infer(Tape& tape, std::span<const Tensor> x,
                   std::span<const Tensor> eps) const override;

  // Sets step t (0-based) of the posterior; `gain` is ignored for t = 0.
  void set_posterior_step(int t, const Tensor& gain, const Tensor& offset, const Tensor& log_var);

 private:
  Eigen::Index Z_ = 0, F_ = 0;
  int steps_ = 0;
  ParamSet theta_, phi_;
  ParamId a_ = 0, c_ = 0, q_lv_ = 0, r_lv_ = 0, mu0_ = 0, p0_lv_ = 0;
  std::vector<ParamId> gain_, offset_, log_var_;
};

}  // namespace dmmpose
