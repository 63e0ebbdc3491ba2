#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace dmmpose {

// Row-major dense matrix of doubles. Every tensor in the project is rank <= 2:
// batched activations are (batch x features), weights are (in x out).
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using Rng = std::mt19937_64;

inline std::vector<std::size_t> shape_of(const Tensor& t) {
  return {static_cast<std::size_t>(t.rows()), static_cast<std::size_t>(t.cols())};
}

std::string shape_string(const Tensor& t);

bool all_finite(const Tensor& t);

// Standard normal draws, filled row by row.
Tensor standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

// Independent generator for stream `stream` derived from a base seed.
Rng derive_rng(std::uint64_t seed, std::uint64_t stream);

}  // namespace dmmpose
