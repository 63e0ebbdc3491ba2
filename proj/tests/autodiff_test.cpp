#include "dmmpose/autodiff.hpp"
#include "dmmpose/gaussian.hpp"
#include "dmmpose/layers.hpp"

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace dmmpose;
using dmmpose::testing::check_loss_gradient;
using dmmpose::testing::random_tensor;

TEST(Backprop, SumOfSquares) {
  ParamSet p;
  Tensor w(1, 3);
  w << 1, 2, 3;
  p.add("w", w);
  Tape tape;
  Graph g{tape, p};
  auto grads = tape.backward(ad::sum(ad::square(g[0])), p);
  Tensor expected(1, 3);
  expected << 2, 4, 6;
  EXPECT_EQ(grads[0], expected);
}

TEST(Backprop, ConstantLossGivesZeroGradients) {
  ParamSet p;
  p.add("w", Tensor::Ones(2, 2));
  p.add("unused", Tensor::Ones(1, 4));
  Tape tape;
  Graph g{tape, p};
  g[0];
  Var loss = ad::sum(tape.constant(Tensor::Constant(1, 1, 7.0)));
  auto grads = tape.backward(loss, p);
  EXPECT_EQ(grads[0], Tensor::Zero(2, 2));
  EXPECT_EQ(grads[1], Tensor::Zero(1, 4));
}

TEST(Backprop, NonScalarLossThrows) {
  ParamSet p;
  p.add("w", Tensor::Ones(2, 2));
  Tape tape;
  Graph g{tape, p};
  EXPECT_THROW(tape.backward(ad::square(g[0])), std::invalid_argument);
}

TEST(Backprop, FanOutAccumulates) {
  ParamSet p;
  p.add("w", Tensor::Constant(1, 1, 3.0));
  Tape tape;
  Graph g{tape, p};
  Var w = g[0];
  // w*w + 2w + w  => d/dw = 2w + 3
  Var loss = ad::sum(ad::add(ad::add(ad::mul(w, w), ad::scale(w, 2.0)), w));
  EXPECT_DOUBLE_EQ(tape.backward(loss, p)[0](0, 0), 9.0);
}

TEST(Backprop, ReplayIsBitIdentical) {
  Rng rng(3);
  ParamSet p;
  p.add("a", random_tensor(4, 5, rng));
  p.add("b", random_tensor(1, 5, rng));
  Tape tape;
  Graph g{tape, p};
  Var x = tape.constant(random_tensor(3, 4, rng));
  Var loss = ad::sum(ad::tanh(ad::add(ad::matmul(x, g[0]), g[1])));
  auto g1 = tape.backward(loss, p);
  auto g2 = tape.backward(loss, p);
  ASSERT_EQ(g1.size(), g2.size());
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_EQ(g1[i], g2[i]);
}

// One finite-difference check per primitive.
class PrimitiveGradients : public ::testing::Test {
 protected:
  Rng rng{2024};
  ParamSet p;
  void SetUp() override {
    p.add("a", random_tensor(3, 4, rng));
    p.add("b", random_tensor(3, 4, rng));
    p.add("row", random_tensor(1, 4, rng));
    p.add("w", random_tensor(4, 2, rng));
  }
  // Weighted sum so every output element gets a distinct sensitivity.
  Var reduce(const Graph& g, Var y) {
    Tensor weights(y.rows(), y.cols());
    for (Eigen::Index i = 0; i < weights.size(); ++i) weights.data()[i] = 0.3 + 0.17 * i;
    return ad::sum(ad::mul(y, g.tape.constant(weights)));
  }
};

TEST_F(PrimitiveGradients, Matmul) {
  auto r = check_loss_gradient(p, [&](const Graph& g) { return reduce(g, ad::matmul(g[0], g[3])); });
  EXPECT_GRAD_OK(r);
}
TEST_F(PrimitiveGradients, AddSubBroadcast) {
  auto r = check_loss_gradient(p, [&](const Graph& g) {
    return reduce(g, ad::sub(ad::add(g[0], g[2]), ad::add(g[1], g[2])));
  });
  EXPECT_GRAD_OK(r);
  auto r2 = check_loss_gradient(p, [&](const Graph& g) { return reduce(g, ad::sub(g[0], g[2])); });
  EXPECT_GRAD_OK(r2);
}
TEST_F(PrimitiveGradients, Mul) {
  auto r = check_loss_gradient(p, [&](const Graph& g) { return reduce(g, ad::mul(g[0], g[1])); });
  EXPECT_GRAD_OK(r);
}
TEST_F(PrimitiveGradients, ScaleNegOneMinus) {
  auto r = check_loss_gradient(p, [&](const Graph& g) {
    return reduce(g, ad::one_minus(ad::neg(ad::scale(g[0], 2.5))));
  });
  EXPECT_GRAD_OK(r);
}
TEST_F(PrimitiveGradients, Activations) {
  for (auto fn : {&ad::tanh, &ad::sigmoid, &ad::relu, &ad::exp, &ad::square}) {
    auto r = check_loss_gradient(p, [&](const Graph& g) { return reduce(g, fn(g[0])); });
    EXPECT_GRAD_OK(r);
  }
}
TEST_F(PrimitiveGradients, ClampMin) {
  auto r = check_loss_gradient(p, [&](const Graph& g) { return reduce(g, ad::clamp_min(g[0], 0.1)); });
  EXPECT_GRAD_OK(r);
}
TEST_F(PrimitiveGradients, ConcatSliceBroadcast) {
  auto r = check_loss_gradient(p, [&](const Graph& g) {
    std::vector<Var> parts{g[0], g[1], ad::broadcast_rows(g[2], 3)};
    Var c = ad::concat_cols(parts);
    return reduce(g, ad::slice_cols(c, 2, 7));
  });
  EXPECT_GRAD_OK(r);
}
TEST_F(PrimitiveGradients, RowSum) {
  auto r = check_loss_gradient(p, [&](const Graph& g) { return reduce(g, ad::row_sum(g[0])); });
  EXPECT_GRAD_OK(r);
}
TEST_F(PrimitiveGradients, GaussianLogPdf) {
  auto r = check_loss_gradient(p, [&](const Graph& g) {
    return reduce(g, ad::gaussian_log_pdf_rows(g[0], g[1], ad::scale(g[0], 0.3)));
  });
  EXPECT_GRAD_OK(r);
}
TEST_F(PrimitiveGradients, GaussianKl) {
  auto r = check_loss_gradient(p, [&](const Graph& g) {
    Var lv = ad::broadcast_rows(g[2], 3);
    return reduce(g, ad::gaussian_kl_rows(g[0], ad::scale(g[1], 0.5), g[1], lv));
  });
  EXPECT_GRAD_OK(r);
}
TEST_F(PrimitiveGradients, ReparamSample) {
  Tensor eps = random_tensor(3, 4, rng);
  auto r = check_loss_gradient(p, [&](const Graph& g) {
    return reduce(g, ad::reparam_sample(g[0], ad::scale(g[1], 0.5), eps));
  });
  EXPECT_GRAD_OK(r);
}
TEST_F(PrimitiveGradients, SoftmaxCrossEntropy) {
  std::vector<int> labels{0, 3, 1};
  auto r = check_loss_gradient(
      p, [&](const Graph& g) { return reduce(g, ad::softmax_cross_entropy_rows(g[0], labels)); });
  EXPECT_GRAD_OK(r);
}

TEST(TapeOps, ValuesMatchDirectFormulas) {
  Tape tape;
  Tensor m(2, 2), lv(2, 2), x(2, 2);
  m << 0, 1, 2, 3;
  lv << 0, 0.5, -0.5, 1;
  x << 0.3, 0.2, 2.5, 4;
  Var r = ad::gaussian_log_pdf_rows(tape.constant(x), tape.constant(m), tape.constant(lv));
  for (int i = 0; i < 2; ++i) {
    DiagGaussian g(m.row(i).transpose(), lv.row(i).transpose());
    EXPECT_NEAR(r.value()(i, 0), gaussian_log_pdf(x.row(i).transpose(), g), 1e-13);
  }
  Var kl = ad::gaussian_kl_rows(tape.constant(m), tape.constant(lv), tape.constant(x),
                                tape.constant(lv.reverse()));
  for (int i = 0; i < 2; ++i) {
    DiagGaussian q(m.row(i).transpose(), lv.row(i).transpose());
    DiagGaussian pp(x.row(i).transpose(), lv.reverse().row(i).transpose());
    EXPECT_NEAR(kl.value()(i, 0), gaussian_kl(q, pp), 1e-13);
  }
}

TEST(TapeOps, ShapeErrors) {
  Tape tape;
  Var a = tape.constant(Tensor::Zero(2, 3));
  Var b = tape.constant(Tensor::Zero(3, 2));
  EXPECT_THROW(ad::add(a, b), std::invalid_argument);
  EXPECT_THROW(ad::matmul(a, a), std::invalid_argument);
  EXPECT_THROW(ad::slice_cols(a, 2, 2), std::invalid_argument);
}

TEST(LayerGradients, RandomMlp) {
  Rng rng(9);
  ParamSet p;
  Mlp mlp = Mlp::create(p, "mlp", 3, {5, 4}, 2, Activation::Tanh, rng);
  Tensor x = random_tensor(6, 3, rng);
  auto r = check_loss_gradient(p, [&](const Graph& g) {
    return ad::sum(ad::square(mlp(g, g.tape.constant(x))));
  });
  EXPECT_GRAD_OK(r);
}

TEST(LayerGradients, GruUnrolled) {
  Rng rng(10);
  ParamSet p;
  GruCell cell = GruCell::create(p, "gru", 3, 4, rng);
  std::vector<Tensor> xs;
  for (int t = 0; t < 4; ++t) xs.push_back(random_tensor(2, 3, rng));
  auto r = check_loss_gradient(p, [&](const Graph& g) {
    Var h = g.tape.constant(Tensor::Zero(2, 4));
    for (const auto& x : xs) h = cell(g, g.tape.constant(x), h);
    return ad::sum(ad::square(h));
  });
  EXPECT_GRAD_OK(r);
}

TEST(LayerGradients, LstmUnrolled) {
  Rng rng(12);
  ParamSet p;
  LstmCell cell = LstmCell::create(p, "lstm", 3, 4, rng);
  std::vector<Tensor> xs;
  for (int t = 0; t < 4; ++t) xs.push_back(random_tensor(2, 3, rng));
  auto r = check_loss_gradient(p, [&](const Graph& g) {
    LstmState s{g.tape.constant(Tensor::Zero(2, 4)), g.tape.constant(Tensor::Zero(2, 4))};
    for (const auto& x : xs) s = cell(g, g.tape.constant(x), s);
    return ad::sum(ad::square(s.h));
  });
  EXPECT_GRAD_OK(r);
}
