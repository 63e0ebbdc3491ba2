#include "dmmpose/baselines.hpp"
#include "dmmpose/state_space.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace dmmpose;
using dmmpose::testing::check_loss_gradient;
using dmmpose::testing::random_tensor;

namespace {

constexpr BaselineKind kTrainable[] = {BaselineKind::SingleRecurrent, BaselineKind::Erd,
                                       BaselineKind::Stacked3};

RecurrentConfig config(BaselineKind kind, double scale, Eigen::Index F = 3) {
  RecurrentConfig c;
  c.kind = kind;
  c.feature_dim = F;
  c.width_scale = scale;
  c.seed = 3;
  return c;
}

}  // namespace

TEST(ZeroVelocity, RepeatsLastFrame) {
  Rng rng(1);
  PoseSequence obs;
  obs.skeleton = Skeleton::upper_body();
  obs.frames = random_tensor(6, 16, rng);
  obs.actions = std::vector<int>(6, 1);
  PoseSequence f = zero_velocity_forecast(obs, 3);
  ASSERT_EQ(f.num_frames(), 3);
  for (int h = 0; h < 3; ++h) EXPECT_EQ(f.frames.row(h), obs.frames.row(5));
  EXPECT_FALSE(f.actions);
  EXPECT_THROW(zero_velocity_forecast(obs, 0), std::invalid_argument);
}

TEST(ZeroVelocity, ErrorIsDisplacementFromLastObserved) {
  Rng rng(2);
  PoseSequence gt;
  gt.skeleton = Skeleton::upper_body();
  gt.frames = random_tensor(10, 16, rng);
  PoseSequence f = zero_velocity_forecast(gt.slice(0, 4), 6);
  for (int h = 0; h < 6; ++h)
    for (int j = 0; j < 8; ++j)
      EXPECT_EQ((f.joint(h, j) - gt.joint(4 + h, j)).norm(), (gt.joint(3, j) - gt.joint(4 + h, j)).norm());
}

TEST(Baselines, NamesRoundTrip) {
  for (auto k : {BaselineKind::ZeroVelocity, BaselineKind::SingleRecurrent, BaselineKind::Erd, BaselineKind::Stacked3})
    EXPECT_EQ(parse_baseline_kind(baseline_name(k)), k);
  EXPECT_THROW(parse_baseline_kind("lstm"), std::invalid_argument);
}

TEST(Recurrent, NominalWidthsAndScaling) {
  EXPECT_EQ(RecurrentForecaster(config(BaselineKind::SingleRecurrent, 1.0)).layer_widths(),
            (std::vector<Eigen::Index>{128}));
  EXPECT_EQ(RecurrentForecaster(config(BaselineKind::Erd, 0.1)).layer_widths(),
            (std::vector<Eigen::Index>{50, 50, 100, 100, 50, 10}));
  EXPECT_EQ(RecurrentForecaster(config(BaselineKind::Stacked3, 0.1)).layer_widths(),
            (std::vector<Eigen::Index>{50, 100, 100, 100}));
  EXPECT_THROW(RecurrentForecaster(config(BaselineKind::ZeroVelocity, 1.0)), std::invalid_argument);
}

TEST(Recurrent, GradientMatchesFiniteDifferences) {
  for (auto kind : kTrainable) {
    RecurrentForecaster m(config(kind, 0.008));
    Rng rng(4);
    const TimeBatch x = time_major(random_tensor(4, 3, rng));
    auto res = check_loss_gradient(m.params(), [&](const Graph& g) { return teacher_forced_loss(g, m, x); });
    EXPECT_GRAD_OK(res) << baseline_name(kind);
  }
}

TEST(Recurrent, ZeroWeightsPredictZero) {
  RecurrentForecaster m(config(BaselineKind::Erd, 0.05));
  for (std::size_t i = 0; i < m.params().size(); ++i) m.params().value(i).setZero();
  Rng rng(5);
  EXPECT_EQ(recurrent_forecast(m, random_tensor(5, 3, rng), 4), Tensor::Zero(4, 3));
}

TEST(Recurrent, ForecastIsPure) {
  RecurrentForecaster m(config(BaselineKind::Stacked3, 0.05));
  Rng rng(6);
  const Tensor obs = random_tensor(5, 3, rng);
  EXPECT_EQ(recurrent_forecast(m, obs, 7), recurrent_forecast(m, obs, 7));
  EXPECT_THROW(recurrent_forecast(m, obs, 0), std::invalid_argument);
}

TEST(Recurrent, ZeroLearningRateLeavesWeights) {
  RecurrentConfig c = config(BaselineKind::SingleRecurrent, 0.1);
  c.train.epochs = 3;
  c.train.learning_rate = 0;
  RecurrentForecaster m(c);
  const ParamSet before = m.params();
  Rng rng(7);
  std::vector<Tensor> data{random_tensor(10, 3, rng)};
  train_recurrent(m, data);
  EXPECT_EQ(m.params().values(), before.values());
}

TEST(Recurrent, ConstantDatasetConverges) {
  for (auto kind : kTrainable) {
    RecurrentConfig c = config(kind, 0.1);
    c.train.epochs = 500;
    c.train.window = 10;
    c.train.learning_rate = 3e-3;
    RecurrentForecaster m(c);
    Tensor row(1, 3);
    row << 0.5, -1.0, 2.0;
    std::vector<Tensor> data{row.replicate(12, 1), row.replicate(15, 1)};
    FitLog log = train_recurrent(m, data);
    ASSERT_EQ(log.size(), 500u);
    EXPECT_EQ(log.back().step, 500);
    EXPECT_LT(log.back().loss, 1e-3) << baseline_name(kind);
  }
}

TEST(Recurrent, DeterministicTraining) {
  RecurrentConfig c = config(BaselineKind::Erd, 0.05);
  c.train.epochs = 5;
  c.train.window = 6;
  Rng rng(8);
  std::vector<Tensor> data{random_tensor(10, 3, rng), random_tensor(8, 3, rng)};
  RecurrentForecaster a(c), b(c);
  FitLog la = train_recurrent(a, data), lb = train_recurrent(b, data);
  EXPECT_EQ(la.back().loss, lb.back().loss);
  EXPECT_EQ(a.params().values(), b.params().values());
}

TEST(Recurrent, OverfitPeriodicSequenceContinues) {
  const int P = 20;
  Tensor seq(6 * P, 2);
  for (int t = 0; t < seq.rows(); ++t) {
    seq(t, 0) = std::sin(2 * std::numbers::pi * t / P);
    seq(t, 1) = std::cos(2 * std::numbers::pi * t / P);
  }
  RecurrentConfig c = config(BaselineKind::SingleRecurrent, 0.25, 2);
  c.train.epochs = 1500;
  c.train.window = 3 * P;
  c.train.learning_rate = 5e-3;
  RecurrentForecaster m(c);
  std::vector<Tensor> data{seq.topRows(5 * P)};
  train_recurrent(m, data);
  const Tensor pred = recurrent_forecast(m, seq.topRows(5 * P), P);
  const Tensor truth = seq.bottomRows(P);
  const double rel = (pred - truth).norm() / truth.norm();
  EXPECT_LT(rel, 0.10) << "relative l2 " << rel;
}

TEST(Recurrent, CheckpointRoundTrip) {
  RecurrentForecaster m(config(BaselineKind::Stacked3, 0.02));
  const std::string bytes = serialize_checkpoint(to_checkpoint(m));
  RecurrentForecaster back = recurrent_from_checkpoint(parse_checkpoint(bytes));
  EXPECT_EQ(serialize_checkpoint(to_checkpoint(back)), bytes);
  Rng rng(9);
  const Tensor obs = random_tensor(4, 3, rng);
  EXPECT_EQ(recurrent_forecast(back, obs, 3), recurrent_forecast(m, obs, 3));
  Checkpoint c = parse_checkpoint(bytes);
  c.kind = "erd";
  EXPECT_THROW(recurrent_from_checkpoint(c), CheckpointError);
}
