#pragma once

#include "dmmpose/tensor.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dmmpose {

using ParamId = std::size_t;

// Ordered, named collection of trainable tensors. Order of insertion is the
// canonical order for gradients, optimizer state and checkpoints.
class ParamSet {
 public:
  ParamId add(std::string name, Tensor init);

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  const std::string& name(ParamId id) const { return names_.at(id); }
  Tensor& value(ParamId id) { return values_.at(id); }
  const Tensor& value(ParamId id) const { return values_.at(id); }

  std::optional<ParamId> find(std::string_view name) const;

  // Total number of scalar parameters.
  std::size_t count() const;
  double l2_norm() const;

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Tensor>& values() const { return values_; }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

// Gradient tensors aligned with a ParamSet.
using Gradients = std::vector<Tensor>;

Gradients zeros_like(const ParamSet& params);

// Adds `src` into `dst` element-wise; shapes must match.
void accumulate(Gradients& dst, const Gradients& src);

double global_norm(const Gradients& grads);

}  // namespace dmmpose
