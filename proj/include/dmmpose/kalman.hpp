#pragma once

#include "dmmpose/tensor.hpp"

#include <Eigen/Dense>

#include <vector>

namespace dmmpose {

// Linear-Gaussian state-space model:
//   z_1 ~ N(mu0, P0), z_t = A z_{t-1} + N(0, Q), x_t = C z_t + N(0, R).
// Covariances are dense here; the model-side restriction to diagonal noise is
// enforced where a spec is turned into a trainable model.
struct LdsSpec {
  Eigen::MatrixXd A;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd C;
  Eigen::MatrixXd R;
  Eigen::VectorXd mu0;
  Eigen::MatrixXd P0;

  Eigen::Index latent_dim() const { return A.rows(); }
  Eigen::Index obs_dim() const { return C.rows(); }
  void validate() const;
};

struct KalmanState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

struct KalmanResult {
  double log_likelihood = 0.0;
  std::vector<KalmanState> filtered;  // p(z_t | x_{1:t})
};

// Forward filtering over the rows of x (T x obs_dim). Throws
// std::runtime_error if an innovation covariance is not positive definite.
KalmanResult kalman_filter(const Tensor& x, const LdsSpec& spec);
double kalman_log_likelihood(const Tensor& x, const LdsSpec& spec);

// Emission means C A^h m for h = 1..H given a filtered state; (H x obs_dim).
Tensor kalman_predict(const LdsSpec& spec, const KalmanState& filtered, int horizon);

// Draws one (T x obs_dim) sequence from the model.
Tensor sample_lds(const LdsSpec& spec, int steps, Rng& rng);

}  // namespace dmmpose
