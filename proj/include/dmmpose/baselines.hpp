#pragma once

#include "dmmpose/checkpoint.hpp"
#include "dmmpose/fit.hpp"
#include "dmmpose/layers.hpp"
#include "dmmpose/pose.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace dmmpose {

enum class BaselineKind { ZeroVelocity, SingleRecurrent, Erd, Stacked3 };

std::string_view baseline_name(BaselineKind kind);
// Accepts the names produced by baseline_name; throws std::invalid_argument.
BaselineKind parse_baseline_kind(std::string_view name);

// H copies of the last observed frame.
PoseSequence zero_velocity_forecast(const PoseSequence& observed, int horizon);

struct RecurrentConfig {
  BaselineKind kind = BaselineKind::SingleRecurrent;
  Eigen::Index feature_dim = 16;
  double width_scale = 1.0;  // multiplies every layer width
  std::uint64_t seed = 0;    // initialization
  FitConfig train;

  void validate() const;
};

nlohmann::json to_json(const RecurrentConfig& cfg);
RecurrentConfig recurrent_config_from_json(const nlohmann::json& j);

// Next-frame regressor: ReLU FC layers, stacked LSTMs, ReLU FC layers, then
// an affine output over the features.
//   SingleRecurrent: LSTM 128
//   Erd:             FC 500, FC 500, LSTM 1000 x2, FC 500, FC 100
//   Stacked3:        FC 500, LSTM 1000 x3
class RecurrentForecaster {
 public:
  explicit RecurrentForecaster(const RecurrentConfig& cfg);

  const RecurrentConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  // Widths of (pre-FC..., LSTM..., post-FC...) after scaling.
  std::vector<Eigen::Index> layer_widths() const;

  using State = std::vector<LstmState>;
  State initial_state(Tape& tape, Eigen::Index rows) const;
  // Consumes frame x_t and returns the prediction of x_{t+1}.
  Var step(const Graph& g, Var x, State& state) const;

 private:
  RecurrentConfig cfg_;
  ParamSet params_;
  std::vector<Linear> pre_;
  std::vector<LstmCell> lstm_;
  std::vector<Linear> post_;
  Linear out_;
};

// Mean squared error of teacher-forced next-frame predictions over a
// time-major batch (T >= 2).
Var teacher_forced_loss(const Graph& g, const RecurrentForecaster& model, std::span<const Tensor> x);

FitLog train_recurrent(RecurrentForecaster& model, std::span<const Tensor> dataset,
                       const std::function<void(const FitLogRow&)>& on_epoch = {});

// Conditions on the observed frames, then feeds each prediction back in.
Tensor recurrent_forecast(const RecurrentForecaster& model, const Tensor& observed, int horizon);

Checkpoint to_checkpoint(const RecurrentForecaster& model, std::optional<NormalizationStats> stats = {});
RecurrentForecaster recurrent_from_checkpoint(const Checkpoint& ckpt);

}  // namespace dmmpose
