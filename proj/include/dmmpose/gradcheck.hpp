#pragma once

#include "dmmpose/params.hpp"
#include "dmmpose/tensor.hpp"

#include <functional>
#include <string>
#include <vector>

namespace dmmpose {

// Central differences (f(p + h) - f(p - h)) / 2h for every coordinate of
// every parameter. `params` is perturbed in place and restored.
Gradients finite_diff_gradient(const std::function<double(const ParamSet&)>& f, ParamSet& params,
                               double h = 1e-5);

struct GradCheckResult {
  bool ok = true;
  double worst_error = 0.0;
  std::string worst_param;
  Eigen::Index worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Element-wise comparison |a - n| <= rtol * max(|a|, |n|) + atol.
GradCheckResult compare_gradients(const ParamSet& params, const Gradients& analytic,
                                  const Gradients& numeric, double rtol, double atol);

// Coordinates to check, per parameter.
using CoordinateMask = std::vector<std::vector<Eigen::Index>>;

// Up to `per_param` distinct random coordinates of every parameter.
CoordinateMask sample_coordinates(const ParamSet& params, Eigen::Index per_param, Rng& rng);

// As above, restricted to the masked coordinates.
Gradients finite_diff_gradient(const std::function<double(const ParamSet&)>& f, ParamSet& params,
                               const CoordinateMask& mask, double h = 1e-5);
GradCheckResult compare_gradients(const ParamSet& params, const Gradients& analytic,
                                  const Gradients& numeric, const CoordinateMask& mask, double rtol,
                                  double atol);

}  // namespace dmmpose
