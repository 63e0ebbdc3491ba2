#include "dmmpose/linear_dmm.hpp"

#include <stdexcept>

namespace dmmpose {
namespace {

Tensor log_diagonal(const Eigen::MatrixXd& m, const char* what) {
  const Eigen::MatrixXd off = m - Eigen::MatrixXd(m.diagonal().asDiagonal());
  if (off.cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument(std::string("linear dmm: ") + what + " must be diagonal");
  return m.diagonal().array().log().matrix().transpose();
}

}  // namespace

LinearGaussianDmm::LinearGaussianDmm(const LdsSpec& spec, int steps) {
  spec.validate();
  if (steps < 1) throw std::invalid_argument("linear dmm: steps must be >= 1");
  Z_ = spec.latent_dim();
  F_ = spec.obs_dim();
  steps_ = steps;
  // Row-vector convention: next = z A^T, x = z C^T.
  a_ = theta_.add("A_t", spec.A.transpose());
  c_ = theta_.add("C_t", spec.C.transpose());
  q_lv_ = theta_.add("Q.log_var", log_diagonal(spec.Q, "Q"));
  r_lv_ = theta_.add("R.log_var", log_diagonal(spec.R, "R"));
  mu0_ = theta_.add("mu0", spec.mu0.transpose());
  p0_lv_ = theta_.add("P0.log_var", log_diagonal(spec.P0, "P0"));
  for (int t = 0; t < steps; ++t) {
    const std::string k = std::to_string(t);
    gain_.push_back(t == 0 ? 0 : phi_.add("q" + k + ".gain", Tensor::Zero(Z_, Z_)));
    offset_.push_back(phi_.add("q" + k + ".offset", Tensor::Zero(1, Z_)));
    log_var_.push_back(phi_.add("q" + k + ".log_var", Tensor::Zero(1, Z_)));
  }
}

void LinearGaussianDmm::set_posterior_step(int t, const Tensor& gain, const Tensor& offset,
                                           const Tensor& log_var) {
  if (t < 0 || t >= steps_) throw std::out_of_range("linear dmm: posterior step out of range");
  const auto i = static_cast<std::size_t>(t);
  if (t > 0) phi_.value(gain_[i]) = gain;
  phi_.value(offset_[i]) = offset;
  phi_.value(log_var_[i]) = log_var;
}

GaussianVar LinearGaussianDmm::initial_prior(Tape& tape, Eigen::Index rows) const {
  Graph g{tape, theta_};
  return {ad::broadcast_rows(g[mu0_], rows), ad::broadcast_rows(g[p0_lv_], rows)};
}

GaussianVar LinearGaussianDmm::transition(Tape& tape, Var z_prev) const {
  Graph g{tape, theta_};
  return {ad::matmul(z_prev, g[a_]), ad::broadcast_rows(g[q_lv_], z_prev.rows())};
}

GaussianVar LinearGaussianDmm::emission(Tape& tape, Var z) const {
  Graph g{tape, theta_};
  return {ad::matmul(z, g[c_]), ad::broadcast_rows(g[r_lv_], z.rows())};
}

LatentPath LinearGaussianDmm::infer(Tape& tape, std::span<const Tensor> x,
                                    std::span<const Tensor> eps) const {
  const std::size_t T = x.size();
  if (T == 0) throw std::invalid_argument("infer: empty sequence");
  if (T > static_cast<std::size_t>(steps_))
    throw std::invalid_argument("linear dmm: posterior fitted for " + std::to_string(steps_) +
                                " steps, got " + std::to_string(T));
  if (eps.size() != T) throw std::invalid_argument("infer: need one noise block per frame");
  const Eigen::Index B = x.front().rows();
  Graph g{tape, phi_};
  LatentPath path;
  for (std::size_t t = 0; t < T; ++t) {
    Var mean = ad::broadcast_rows(g[offset_[t]], B);
    if (t > 0) mean = ad::add(ad::matmul(path.samples.back(), g[gain_[t]]), g[offset_[t]]);
    GaussianVar q{mean, ad::broadcast_rows(g[log_var_[t]], B)};
    path.posteriors.push_back(q);
    path.samples.push_back(ad::reparam_sample(q.mean, q.log_var, eps[t]));
  }
  return path;
}

}  // namespace dmmpose
