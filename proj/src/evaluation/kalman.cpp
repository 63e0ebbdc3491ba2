#include "dmmpose/kalman.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dmmpose {

void LdsSpec::validate() const {
  const Eigen::Index Z = A.rows(), F = C.rows();
  if (Z < 1 || F < 1) throw std::invalid_argument("lds: empty dimensions");
  if (A.cols() != Z || Q.rows() != Z || Q.cols() != Z || C.cols() != Z || R.rows() != F ||
      R.cols() != F || mu0.size() != Z || P0.rows() != Z || P0.cols() != Z)
    throw std::invalid_argument("lds: inconsistent dimensions");
  auto pd = [](const Eigen::MatrixXd& m) { return Eigen::LLT<Eigen::MatrixXd>(m).info() == Eigen::Success; };
  if (!pd(Q) || !pd(R) || !pd(P0)) throw std::invalid_argument("lds: covariances must be positive definite");
}

KalmanResult kalman_filter(const Tensor& x, const LdsSpec& spec) {
  spec.validate();
  if (x.cols() != spec.obs_dim()) throw std::invalid_argument("kalman: observation width mismatch");
  const Eigen::Index Z = spec.latent_dim(), F = spec.obs_dim();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(Z, Z);
  KalmanResult out;
  Eigen::VectorXd m = spec.mu0;
  Eigen::MatrixXd P = spec.P0;
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    if (t > 0) {
      m = spec.A * m;
      P = spec.A * P * spec.A.transpose() + spec.Q;
    }
    const Eigen::VectorXd v = x.row(t).transpose() - spec.C * m;
    Eigen::MatrixXd S = spec.C * P * spec.C.transpose() + spec.R;
    S = 0.5 * (S + S.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("kalman: innovation covariance not positive definite at step " +
                               std::to_string(t));
    const Eigen::MatrixXd L = llt.matrixL();
    const double logdet = 2.0 * L.diagonal().array().log().sum();
    const Eigen::VectorXd w = llt.solve(v);
    out.log_likelihood += -0.5 * (F * std::log(2.0 * std::numbers::pi) + logdet + v.dot(w));
    const Eigen::MatrixXd K = llt.solve(spec.C * P).transpose();  // P C^T S^-1
    m += K * v;
    const Eigen::MatrixXd IKC = I - K * spec.C;
    P = IKC * P * IKC.transpose() + K * spec.R * K.transpose();  // Joseph form
    P = 0.5 * (P + P.transpose());
    out.filtered.push_back({m, P});
  }
  return out;
}

double kalman_log_likelihood(const Tensor& x, const LdsSpec& spec) {
  return kalman_filter(x, spec).log_likelihood;
}

Tensor kalman_predict(const LdsSpec& spec, const KalmanState& filtered, int horizon) {
  if (horizon < 1) throw std::invalid_argument("kalman_predict: horizon must be >= 1");
  Tensor out(horizon, spec.obs_dim());
  Eigen::VectorXd m = filtered.mean;
  for (int h = 0; h < horizon; ++h) {
    m = spec.A * m;
    out.row(h) = (spec.C * m).transpose();
  }
  return out;
}

Tensor sample_lds(const LdsSpec& spec, int steps, Rng& rng) {
  spec.validate();
  const Eigen::MatrixXd Lq = spec.Q.llt().matrixL(), Lr = spec.R.llt().matrixL(),
                        L0 = spec.P0.llt().matrixL();
  auto normal = [&](Eigen::Index n) {
    Tensor e = standard_normal(n, 1, rng);
    return Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(e.data(), n));
  };
  Tensor x(steps, spec.obs_dim());
  Eigen::VectorXd z = spec.mu0 + L0 * normal(spec.latent_dim());
  for (int t = 0; t < steps; ++t) {
    if (t > 0) z = spec.A * z + Lq * normal(spec.latent_dim());
    x.row(t) = (spec.C * z + Lr * normal(spec.obs_dim())).transpose();
  }
  return x;
}

}  // namespace dmmpose
