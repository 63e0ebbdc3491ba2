#include "dmmpose/gaussian.hpp"
#include "dmmpose/gradcheck.hpp"
#include "dmmpose/optimizer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace dmmpose;

namespace {

DiagGaussian random_gaussian(Eigen::Index dim, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DiagGaussian g(Vector::Zero(dim), Vector::Zero(dim));
  for (Eigen::Index i = 0; i < dim; ++i) {
    g.mean[i] = n(rng);
    g.log_var[i] = u(rng);
  }
  return g;
}

Vector random_vector(Eigen::Index dim, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = n(rng);
  return v;
}

}  // namespace

TEST(GaussianLogPdf, StandardNormalAtMode) {
  DiagGaussian g = DiagGaussian::standard(1);
  EXPECT_NEAR(gaussian_log_pdf(Vector::Zero(1), g), -0.9189385332046727, 1e-12);
  EXPECT_NEAR(gaussian_log_pdf(Vector::Ones(1), g), -1.4189385332046727, 1e-12);
}

TEST(GaussianLogPdf, MatchesProductOfUnivariateDensities) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    DiagGaussian g = random_gaussian(5, rng);
    Vector x = random_vector(5, rng);
    double product = 1.0;
    for (int d = 0; d < 5; ++d) {
      const double var = std::exp(g.log_var[d]);
      const double z = x[d] - g.mean[d];
      product *= std::exp(-z * z / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
    }
    const double expected = std::log(product);
    EXPECT_NEAR(gaussian_log_pdf(x, g), expected, 1e-12 * std::abs(expected));
  }
}

TEST(GaussianLogPdf, DimensionMismatchThrows) {
  EXPECT_THROW(gaussian_log_pdf(Vector::Zero(2), DiagGaussian::standard(3)),
               std::invalid_argument);
}

TEST(GaussianLogPdf, IntegratesToOneOnGrid) {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    DiagGaussian g = random_gaussian(1, rng);
    const double sd = std::exp(0.5 * g.log_var[0]);
    const double lo = g.mean[0] - 10 * sd, hi = g.mean[0] + 10 * sd;
    const int n = 20000;
    const double dx = (hi - lo) / n;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      Vector x(1);
      x[0] = lo + (i + 0.5) * dx;
      total += std::exp(gaussian_log_pdf(x, g)) * dx;
    }
    EXPECT_NEAR(total, 1.0, 1e-3);
  }
}

TEST(GaussianKl, AnalyticCases) {
  DiagGaussian p = DiagGaussian::standard(1);
  EXPECT_DOUBLE_EQ(gaussian_kl(p, p), 0.0);
  DiagGaussian q1(Vector::Ones(1), Vector::Zero(1));
  EXPECT_NEAR(gaussian_kl(q1, p), 0.5, 1e-12);
  DiagGaussian q2(Vector::Zero(1), Vector::Constant(1, std::log(4.0)));
  EXPECT_NEAR(gaussian_kl(q2, p), 0.8068528194400547, 1e-12);
}

TEST(GaussianKl, DimensionMismatchThrows) {
  EXPECT_THROW(gaussian_kl(DiagGaussian::standard(2), DiagGaussian::standard(3)),
               std::invalid_argument);
}

TEST(GaussianKl, NonNegativeAndZeroOnlyForIdentical) {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    DiagGaussian q = random_gaussian(4, rng);
    DiagGaussian p = random_gaussian(4, rng);
    EXPECT_GT(gaussian_kl(q, p), 0.0);
    EXPECT_EQ(gaussian_kl(q, q), 0.0);
  }
}

TEST(GaussianKl, AgreesWithMonteCarlo) {
  Rng rng(17);
  DiagGaussian q = random_gaussian(10, rng);
  DiagGaussian p = random_gaussian(10, rng);
  const int n = 1000000;
  double s = 0.0, s2 = 0.0;
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector eps(10);
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < 10; ++d) eps[d] = normal(rng);
    Vector x = reparam_sample(q, eps);
    const double w = gaussian_log_pdf(x, q) - gaussian_log_pdf(x, p);
    s += w;
    s2 += w * w;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_LE(std::abs(mean - gaussian_kl(q, p)), 3.0 * se);
}

TEST(ReparamSample, ZeroNoiseReturnsMean) {
  Rng rng(1);
  DiagGaussian g = random_gaussian(6, rng);
  EXPECT_EQ(reparam_sample(g, Vector::Zero(6)), g.mean);
}

TEST(ReparamSample, FlooredVarianceStaysNearMean) {
  Rng rng(2);
  DiagGaussian g = random_gaussian(6, rng);
  g.log_var.setConstant(log_variance_floor());
  Vector eps = Vector::Constant(6, 3.0);
  const double bound = 3.0 * std::sqrt(kVarianceFloor);
  EXPECT_LE((reparam_sample(g, eps) - g.mean).cwiseAbs().maxCoeff(), bound + 1e-15);
  EXPECT_LE((reparam_sample(g, -eps) - g.mean).cwiseAbs().maxCoeff(), bound + 1e-15);
}

TEST(ReparamSample, EmpiricalMeanMatches) {
  Rng rng(4);
  DiagGaussian g = random_gaussian(3, rng);
  const int n = 100000;
  Vector sum = Vector::Zero(3);
  for (int i = 0; i < n; ++i) sum += reparam_sample(g, random_vector(3, rng));
  Vector mean = sum / n;
  for (int d = 0; d < 3; ++d) {
    const double se = std::exp(0.5 * g.log_var[d]) / std::sqrt(static_cast<double>(n));
    EXPECT_LE(std::abs(mean[d] - g.mean[d]), 4.0 * se);
  }
}

TEST(ReparamSample, AffineInNoise) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    DiagGaussian g = random_gaussian(5, rng);
    Vector e1 = random_vector(5, rng), e2 = random_vector(5, rng);
    const double a = 1.7, b = -0.4;
    Vector lhs = reparam_sample(g, a * e1 + b * e2);
    Vector rhs = a * reparam_sample(g, e1) + b * reparam_sample(g, e2) - (a + b - 1.0) * g.mean;
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ReparamSample, DimensionMismatchThrows) {
  EXPECT_THROW(reparam_sample(DiagGaussian::standard(2), Vector::Zero(3)), std::invalid_argument);
}

TEST(FiniteDiff, Quadratic) {
  ParamSet p;
  p.add("w", Tensor::Constant(1, 1, 3.0));
  auto g = finite_diff_gradient([](const ParamSet& s) { return s.value(0)(0, 0) * s.value(0)(0, 0); },
                                p, 1e-5);
  EXPECT_NEAR(g[0](0, 0), 6.0, 1e-8);
  EXPECT_EQ(p.value(0)(0, 0), 3.0);
}

TEST(FiniteDiff, Sine) {
  ParamSet p;
  p.add("w", Tensor::Zero(1, 1));
  auto g = finite_diff_gradient([](const ParamSet& s) { return std::sin(s.value(0)(0, 0)); }, p,
                                1e-5);
  EXPECT_NEAR(g[0](0, 0), 1.0, 1e-9);
}

TEST(FiniteDiff, RejectsNonPositiveStep) {
  ParamSet p;
  p.add("w", Tensor::Zero(1, 1));
  EXPECT_THROW(finite_diff_gradient([](const ParamSet&) { return 0.0; }, p, 0.0),
               std::invalid_argument);
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  ParamSet p;
  p.add("w", Tensor::Constant(2, 3, 1.25));
  Adam opt(p, {});
  for (int i = 0; i < 5; ++i) opt.step(p, zeros_like(p));
  EXPECT_EQ(p.value(0), Tensor::Constant(2, 3, 1.25));
  EXPECT_EQ(opt.first_moment()[0], Tensor::Zero(2, 3));
}

TEST(Adam, ClipsByGlobalNorm) {
  ParamSet p;
  p.add("a", Tensor::Zero(1, 2));
  p.add("b", Tensor::Zero(1, 1));
  AdamConfig cfg;
  cfg.clip_norm = 1.0;
  Adam opt(p, cfg);
  Gradients g = zeros_like(p);
  g[0] << 1.2, 0.0;
  g[1] << 1.6;  // norm 2 = twice the threshold
  opt.step(p, g);
  // First moment after one step is (1 - beta1) times the clipped gradient.
  EXPECT_NEAR(opt.first_moment()[0](0, 0), 0.1 * 0.6, 1e-15);
  EXPECT_NEAR(opt.first_moment()[1](0, 0), 0.1 * 0.8, 1e-15);
}

TEST(Adam, ConvergesOnQuadratic) {
  ParamSet p;
  p.add("w", Tensor::Zero(1, 1));
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  Adam opt(p, cfg);
  for (int i = 0; i < 200; ++i) {
    Gradients g = zeros_like(p);
    g[0](0, 0) = 2.0 * (p.value(0)(0, 0) - 5.0);
    opt.step(p, g);
  }
  EXPECT_LT(std::abs(p.value(0)(0, 0) - 5.0), 0.05);
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  ParamSet p;
  p.add("good", Tensor::Zero(1, 1));
  p.add("bad", Tensor::Zero(1, 1));
  Adam opt(p, {});
  Gradients g = zeros_like(p);
  g[1](0, 0) = std::nan("");
  try {
    opt.step(p, g);
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
  }
}

TEST(Adam, DeterministicGivenInputs) {
  auto run = [] {
    ParamSet p;
    p.add("w", Tensor::Constant(1, 3, 0.5));
    Adam opt(p, {});
    for (int i = 0; i < 10; ++i) {
      Gradients g = zeros_like(p);
      g[0] << 0.1 * i, -0.3, 1.0 / (i + 1);
      opt.step(p, g);
    }
    return p.value(0);
  };
  EXPECT_EQ(run(), run());
}
