#pragma once

#include "dmmpose/checkpoint.hpp"
#include "dmmpose/layers.hpp"
#include "dmmpose/state_space.hpp"

#include <json.hpp>

#include <vector>

namespace dmmpose {

struct DmmConfig {
  Eigen::Index feature_dim = 16;
  Eigen::Index latent_dim = 50;
  Eigen::Index inference_dim = 50;  // recurrent state and combiner width
  std::vector<Eigen::Index> emission_hidden{100, 100};
  Eigen::Index transition_hidden = 100;
  std::uint64_t seed = 0;  // initialization
  TrainConfig train;

  void validate() const;
};

nlohmann::json to_json(const DmmConfig& cfg);
DmmConfig dmm_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Deep Markov model over standardized pose features.
//
// Generative network:
//   z_1 ~ N(mu0, exp(lv0)) with both vectors learnt directly
//   g = sigmoid(MLP_g(z)), h = MLP_h(z)
//   mean = (1 - g) * (z W + b) + g * h, log_var = Linear(relu(h))
//   x_t ~ N(MLP_e(z_t)) with tanh hidden layers, output split into mean / log_var
// Inference network: forward and backward GRUs over the frames, then
//   t = 1:  tanh(Linear0([start, f_T, b_1]))   -> mean / log_var heads
//   t > 1:  tanh(Linear([z_{t-1}, f_t, b_t]))  -> mean / log_var heads
// All log-variances are clamped below at log(kVarianceFloor); transition
// variances are also capped at kTransitionVarianceCeiling.
class DmmModel : public StateSpaceModel {
 public:
  explicit DmmModel(const DmmConfig& cfg);

  const DmmConfig& config() const { return cfg_; }
  Eigen::Index latent_dim() const override { return cfg_.latent_dim; }
  Eigen::Index feature_dim() const override { return cfg_.feature_dim; }
  ParamSet& generative() override { return theta_; }
  const ParamSet& generative() const override { return theta_; }
  ParamSet& inference() override { return phi_; }
  const ParamSet& inference() const override { return phi_; }

  GaussianVar initial_prior(Tape& tape, Eigen::Index rows) const override;
  GaussianVar transition(Tape& tape, Var z_prev) const override;
  GaussianVar emission(Tape& tape, Var z) const override;
  LatentPath infer(Tape& tape, std::span<const Tensor> x,
                   std::span<const Tensor> eps) const override;

  // Parameter ids, exposed so tests can rig the networks.
  struct Ids {
    ParamId prior_mean, prior_log_var;
    ParamId skip_weight, skip_bias;
    ParamId start_token;
  };
  const Ids& ids() const { return ids_; }
  const Mlp& gate_net() const { return gate_; }
  const Mlp& proposal_net() const { return proposal_; }
  const Mlp& emission_net() const { return emission_; }
  const Linear& transition_variance() const { return trans_var_; }
  const Linear& posterior_mean_head() const { return q_mean_; }
  const Linear& posterior_log_var_head() const { return q_log_var_; }

 private:
  GaussianVar split_heads(Tape& tape, Var hidden, bool initial) const;

  DmmConfig cfg_;
  ParamSet theta_;
  ParamSet phi_;
  Ids ids_{};
  Mlp emission_;
  Mlp gate_;
  Mlp proposal_;
  Linear trans_var_;
  GruCell forward_;
  GruCell backward_;
  Linear combine0_;
  Linear combine_;
  Linear q0_mean_, q0_log_var_;
  Linear q_mean_, q_log_var_;
};

inline constexpr const char* kDmmKind = "dmm";

// Groups "generative" and "inference", config under the dmm kind.
Checkpoint to_checkpoint(const DmmModel& model, std::optional<NormalizationStats> stats = {});
DmmModel dmm_from_checkpoint(const Checkpoint& ckpt);

}  // namespace dmmpose
