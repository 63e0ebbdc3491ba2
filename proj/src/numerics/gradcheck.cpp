#include "dmmpose/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dmmpose {

namespace {

CoordinateMask full_mask(const ParamSet& params) {
  CoordinateMask mask(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    mask[i].resize(static_cast<std::size_t>(params.value(i).size()));
    std::iota(mask[i].begin(), mask[i].end(), Eigen::Index{0});
  }
  return mask;
}

}  // namespace

CoordinateMask sample_coordinates(const ParamSet& params, Eigen::Index per_param, Rng& rng) {
  CoordinateMask mask = full_mask(params);
  for (auto& m : mask) {
    std::shuffle(m.begin(), m.end(), rng);
    if (static_cast<Eigen::Index>(m.size()) > per_param) m.resize(static_cast<std::size_t>(per_param));
    std::sort(m.begin(), m.end());
  }
  return mask;
}

Gradients finite_diff_gradient(const std::function<double(const ParamSet&)>& f, ParamSet& params,
                               double h) {
  return finite_diff_gradient(f, params, full_mask(params), h);
}

GradCheckResult compare_gradients(const ParamSet& params, const Gradients& analytic,
                                  const Gradients& numeric, double rtol, double atol) {
  return compare_gradients(params, analytic, numeric, full_mask(params), rtol, atol);
}

Gradients finite_diff_gradient(const std::function<double(const ParamSet&)>& f, ParamSet& params,
                               const CoordinateMask& mask, double h) {
  if (!(h > 0)) throw std::invalid_argument("finite difference step must be positive");
  if (mask.size() != params.size()) throw std::invalid_argument("finite_diff_gradient: mask size mismatch");
  Gradients out = zeros_like(params);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params.value(i);
    for (Eigen::Index k : mask[i]) {
      const double saved = p.data()[k];
      p.data()[k] = saved + h;
      const double fp = f(params);
      p.data()[k] = saved - h;
      const double fm = f(params);
      p.data()[k] = saved;
      out[i].data()[k] = (fp - fm) / (2.0 * h);
    }
  }
  return out;
}

GradCheckResult compare_gradients(const ParamSet& params, const Gradients& analytic,
                                  const Gradients& numeric, const CoordinateMask& mask, double rtol,
                                  double atol) {
  if (analytic.size() != params.size() || numeric.size() != params.size() || mask.size() != params.size())
    throw std::invalid_argument("compare_gradients: size mismatch");
  GradCheckResult res;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (Eigen::Index k : mask[i]) {
      const double a = analytic[i].data()[k];
      const double n = numeric[i].data()[k];
      const double tol = rtol * std::max(std::abs(a), std::abs(n)) + atol;
      const double err = std::abs(a - n) - tol;
      if (err > 0) res.ok = false;
      if (res.worst_param.empty() || err > res.worst_error) {
        res.worst_error = err;
        res.worst_param = params.name(i);
        res.worst_index = k;
        res.analytic = a;
        res.numeric = n;
      }
    }
  }
  return res;
}

}  // namespace dmmpose
