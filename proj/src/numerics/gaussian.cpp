#include "dmmpose/gaussian.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dmmpose {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

void check_dims(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
}

}  // namespace

double log_variance_floor() { return std::log(kVarianceFloor); }

DiagGaussian::DiagGaussian(Vector m, Vector lv) : mean(std::move(m)), log_var(std::move(lv)) {
  check_dims(mean.size(), log_var.size(), "DiagGaussian");
}

DiagGaussian DiagGaussian::standard(Eigen::Index dim) {
  return DiagGaussian(Vector::Zero(dim), Vector::Zero(dim));
}

double gaussian_log_pdf(const Vector& x, const DiagGaussian& g) {
  check_dims(x.size(), g.mean.size(), "gaussian_log_pdf");
  check_dims(g.log_var.size(), g.mean.size(), "gaussian_log_pdf");
  const auto diff = (x - g.mean).array();
  return (-kHalfLog2Pi - 0.5 * g.log_var.array() - 0.5 * diff.square() * (-g.log_var.array()).exp())
      .sum();
}

double gaussian_kl(const DiagGaussian& q, const DiagGaussian& p) {
  check_dims(q.dim(), p.dim(), "gaussian_kl");
  check_dims(q.log_var.size(), q.dim(), "gaussian_kl");
  check_dims(p.log_var.size(), p.dim(), "gaussian_kl");
  const auto ql = q.log_var.array();
  const auto pl = p.log_var.array();
  const auto d = (q.mean - p.mean).array();
  // Written as expm1(r) - r with r = log(var_q / var_p) so identical inputs
  // give exactly zero.
  const Eigen::ArrayXd r = ql - pl;
  const double kl = 0.5 * (r.unaryExpr([](double v) { return std::expm1(v) - v; }) +
                           d.square() * (-pl).exp())
                              .sum();
  // Rounding can leave a tiny negative value for identical distributions.
  return kl < 0.0 ? 0.0 : kl;
}

Vector reparam_sample(const DiagGaussian& g, const Vector& eps) {
  check_dims(eps.size(), g.dim(), "reparam_sample");
  return g.mean + ((0.5 * g.log_var.array()).exp() * eps.array()).matrix();
}

DiagGaussian GaussianVar::row(Eigen::Index r) const {
  return DiagGaussian(mean.value().row(r).transpose(), log_var.value().row(r).transpose());
}

}  // namespace dmmpose
