#include "dmmpose/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace dmmpose {

Var activate(Var x, Activation act) {
  switch (act) {
    case Activation::Identity: return x;
    case Activation::Tanh: return ad::tanh(x);
    case Activation::Relu: return ad::relu(x);
    case Activation::Sigmoid: return ad::sigmoid(x);
  }
  throw std::logic_error("unknown activation");
}

Tensor glorot_uniform(Eigen::Index in, Eigen::Index out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Tensor w(in, out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
  return w;
}

Linear Linear::create(ParamSet& params, const std::string& name, Eigen::Index in,
                      Eigen::Index out, Rng& rng) {
  if (in <= 0 || out <= 0) throw std::invalid_argument("Linear " + name + ": sizes must be positive");
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = params.add(name + ".w", glorot_uniform(in, out, rng));
  l.bias = params.add(name + ".b", Tensor::Zero(1, out));
  return l;
}

Var Linear::operator()(const Graph& g, Var x) const {
  return ad::add(ad::matmul(x, g[weight]), g[bias]);
}

Mlp Mlp::create(ParamSet& params, const std::string& name, Eigen::Index in,
                const std::vector<Eigen::Index>& hidden_sizes, Eigen::Index out,
                Activation hidden_act, Rng& rng) {
  Mlp m;
  m.hidden = hidden_act;
  Eigen::Index prev = in;
  for (std::size_t i = 0; i < hidden_sizes.size(); ++i) {
    m.layers.push_back(Linear::create(params, name + ".l" + std::to_string(i), prev,
                                      hidden_sizes[i], rng));
    prev = hidden_sizes[i];
  }
  m.layers.push_back(Linear::create(params, name + ".out", prev, out, rng));
  return m;
}

Var Mlp::operator()(const Graph& g, Var x) const {
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) x = activate(layers[i](g, x), hidden);
  return layers.back()(g, x);
}

GruCell GruCell::create(ParamSet& params, const std::string& name, Eigen::Index in,
                        Eigen::Index hidden, Rng& rng) {
  GruCell c;
  c.in = in;
  c.hidden = hidden;
  Tensor wx(in, 3 * hidden);
  for (int k = 0; k < 3; ++k) wx.middleCols(k * hidden, hidden) = glorot_uniform(in, hidden, rng);
  Tensor wh(hidden, 2 * hidden);
  for (int k = 0; k < 2; ++k)
    wh.middleCols(k * hidden, hidden) = glorot_uniform(hidden, hidden, rng);
  c.input_weight = params.add(name + ".wx", std::move(wx));
  c.state_weight = params.add(name + ".wh", std::move(wh));
  c.candidate_weight = params.add(name + ".wn", glorot_uniform(hidden, hidden, rng));
  c.bias = params.add(name + ".b", Tensor::Zero(1, 3 * hidden));
  return c;
}

Var GruCell::operator()(const Graph& g, Var x, Var h) const {
  const Eigen::Index H = hidden;
  Var xw = ad::add(ad::matmul(x, g[input_weight]), g[bias]);
  Var hw = ad::matmul(h, g[state_weight]);
  Var u = ad::sigmoid(ad::add(ad::slice_cols(xw, 0, H), ad::slice_cols(hw, 0, H)));
  Var r = ad::sigmoid(ad::add(ad::slice_cols(xw, H, H), ad::slice_cols(hw, H, H)));
  Var n = ad::tanh(
      ad::add(ad::slice_cols(xw, 2 * H, H), ad::matmul(ad::mul(r, h), g[candidate_weight])));
  return ad::add(ad::mul(ad::one_minus(u), n), ad::mul(u, h));
}

LstmCell LstmCell::create(ParamSet& params, const std::string& name, Eigen::Index in,
                          Eigen::Index hidden, Rng& rng) {
  LstmCell c;
  c.in = in;
  c.hidden = hidden;
  Tensor wx(in, 4 * hidden);
  Tensor wh(hidden, 4 * hidden);
  for (int k = 0; k < 4; ++k) {
    wx.middleCols(k * hidden, hidden) = glorot_uniform(in, hidden, rng);
    wh.middleCols(k * hidden, hidden) = glorot_uniform(hidden, hidden, rng);
  }
  Tensor b = Tensor::Zero(1, 4 * hidden);
  b.middleCols(hidden, hidden).setOnes();
  c.input_weight = params.add(name + ".wx", std::move(wx));
  c.state_weight = params.add(name + ".wh", std::move(wh));
  c.bias = params.add(name + ".b", std::move(b));
  return c;
}

LstmState LstmCell::operator()(const Graph& g, Var x, const LstmState& s) const {
  const Eigen::Index H = hidden;
  Var z = ad::add(ad::add(ad::matmul(x, g[input_weight]), ad::matmul(s.h, g[state_weight])),
                  g[bias]);
  Var i = ad::sigmoid(ad::slice_cols(z, 0, H));
  Var f = ad::sigmoid(ad::slice_cols(z, H, H));
  Var cand = ad::tanh(ad::slice_cols(z, 2 * H, H));
  Var o = ad::sigmoid(ad::slice_cols(z, 3 * H, H));
  Var c = ad::add(ad::mul(f, s.c), ad::mul(i, cand));
  return {ad::mul(o, ad::tanh(c)), c};
}

}  // namespace dmmpose
