#include "dmmpose/tensor.hpp"

#include <sstream>

namespace dmmpose {

std::string shape_string(const Tensor& t) {
  std::ostringstream os;
  os << "[" << t.rows() << ", " << t.cols() << "]";
  return os.str();
}

bool all_finite(const Tensor& t) { return t.allFinite(); }

Tensor standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor out(rows, cols);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = normal(rng);
  return out;
}

Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

}  // namespace dmmpose
