#pragma once

#include "dmmpose/autodiff.hpp"
#include "dmmpose/params.hpp"

#include <string>
#include <vector>

namespace dmmpose {

enum class Activation { Identity, Tanh, Relu, Sigmoid };

Var activate(Var x, Activation act);

// y = x W + b with W of shape (in x out) and b a single row.
struct Linear {
  ParamId weight = 0;
  ParamId bias = 0;
  Eigen::Index in = 0;
  Eigen::Index out = 0;

  // Glorot-uniform weights, zero bias.
  static Linear create(ParamSet& params, const std::string& name, Eigen::Index in,
                       Eigen::Index out, Rng& rng);
  Var operator()(const Graph& g, Var x) const;
};

// Stack of Linear layers with `hidden` activation between them; the last
// layer is affine.
struct Mlp {
  std::vector<Linear> layers;
  Activation hidden = Activation::Tanh;

  static Mlp create(ParamSet& params, const std::string& name, Eigen::Index in,
                    const std::vector<Eigen::Index>& hidden_sizes, Eigen::Index out,
                    Activation hidden_act, Rng& rng);
  Var operator()(const Graph& g, Var x) const;
  Eigen::Index out_dim() const { return layers.back().out; }
};

// Gated recurrent unit:
//   u = sigmoid(x Wu + h Uu + bu), r = sigmoid(x Wr + h Ur + br)
//   n = tanh(x Wn + (r * h) Un + bn), h' = (1 - u) * n + u * h
struct GruCell {
  ParamId input_weight = 0;   // in x 3H  (u | r | n)
  ParamId state_weight = 0;   // H x 2H   (u | r)
  ParamId candidate_weight = 0;  // H x H
  ParamId bias = 0;           // 1 x 3H
  Eigen::Index in = 0;
  Eigen::Index hidden = 0;

  static GruCell create(ParamSet& params, const std::string& name, Eigen::Index in,
                        Eigen::Index hidden, Rng& rng);
  Var operator()(const Graph& g, Var x, Var h) const;
};

struct LstmState {
  Var h;
  Var c;
};

// Long short-term memory cell with gate order (input | forget | cell | output)
// and forget-gate bias initialised to 1.
struct LstmCell {
  ParamId input_weight = 0;  // in x 4H
  ParamId state_weight = 0;  // H x 4H
  ParamId bias = 0;          // 1 x 4H
  Eigen::Index in = 0;
  Eigen::Index hidden = 0;

  static LstmCell create(ParamSet& params, const std::string& name, Eigen::Index in,
                         Eigen::Index hidden, Rng& rng);
  LstmState operator()(const Graph& g, Var x, const LstmState& s) const;
};

Tensor glorot_uniform(Eigen::Index in, Eigen::Index out, Rng& rng);

}  // namespace dmmpose
