#include "dmmpose/params.hpp"

#include <cmath>
#include <stdexcept>

namespace dmmpose {

ParamId ParamSet::add(std::string name, Tensor init) {
  if (find(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  names_.push_back(std::move(name));
  values_.push_back(std::move(init));
  return values_.size() - 1;
}

std::optional<ParamId> ParamSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  return std::nullopt;
}

std::size_t ParamSet::count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

double ParamSet::l2_norm() const {
  double s = 0.0;
  for (const auto& v : values_) s += v.squaredNorm();
  return std::sqrt(s);
}

Gradients zeros_like(const ParamSet& params) {
  Gradients g;
  g.reserve(params.size());
  for (const auto& v : params.values()) g.push_back(Tensor::Zero(v.rows(), v.cols()));
  return g;
}

void accumulate(Gradients& dst, const Gradients& src) {
  if (dst.size() != src.size()) throw std::invalid_argument("gradient set size mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i].rows() != src[i].rows() || dst[i].cols() != src[i].cols())
      throw std::invalid_argument("gradient shape mismatch");
    dst[i] += src[i];
  }
}

double global_norm(const Gradients& grads) {
  double s = 0.0;
  for (const auto& g : grads) s += g.squaredNorm();
  return std::sqrt(s);
}

}  // namespace dmmpose
