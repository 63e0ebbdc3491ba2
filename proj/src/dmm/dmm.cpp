#include "dmmpose/dmm.hpp"

#include <cmath>
#include <stdexcept>

namespace dmmpose {

using nlohmann::json;

void DmmConfig::validate() const {
  if (feature_dim < 1 || latent_dim < 1 || inference_dim < 1 || transition_hidden < 1)
    throw std::invalid_argument("dmm config: sizes must be positive");
  for (auto h : emission_hidden)
    if (h < 1) throw std::invalid_argument("dmm config: emission hidden sizes must be positive");
}

json to_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"window", c.window},
              {"samples_per_sequence", c.samples_per_sequence},
              {"learning_rate", c.learning_rate},
              {"clip_norm", c.clip_norm},
              {"kl_warmup_steps", c.kl_warmup_steps},
              {"seed", c.seed},
              {"train_generative", c.train_generative},
              {"train_inference", c.train_inference}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.window = j.at("window").get<int>();
  c.samples_per_sequence = j.at("samples_per_sequence").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.kl_warmup_steps = j.at("kl_warmup_steps").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.train_generative = j.at("train_generative").get<bool>();
  c.train_inference = j.at("train_inference").get<bool>();
  return c;
}

json to_json(const DmmConfig& c) {
  return json{{"feature_dim", c.feature_dim},
              {"latent_dim", c.latent_dim},
              {"inference_dim", c.inference_dim},
              {"emission_hidden", c.emission_hidden},
              {"transition_hidden", c.transition_hidden},
              {"seed", c.seed},
              {"train", to_json(c.train)}};
}

DmmConfig dmm_config_from_json(const json& j) {
  DmmConfig c;
  c.feature_dim = j.at("feature_dim").get<Eigen::Index>();
  c.latent_dim = j.at("latent_dim").get<Eigen::Index>();
  c.inference_dim = j.at("inference_dim").get<Eigen::Index>();
  c.emission_hidden = j.at("emission_hidden").get<std::vector<Eigen::Index>>();
  c.transition_hidden = j.at("transition_hidden").get<Eigen::Index>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.train = train_config_from_json(j.at("train"));
  c.validate();
  return c;
}

DmmModel::DmmModel(const DmmConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const Eigen::Index Z = cfg_.latent_dim, F = cfg_.feature_dim, H = cfg_.inference_dim;
  Rng rng = derive_rng(cfg_.seed, 0x646d6d);

  ids_.prior_mean = theta_.add("prior.mean", Tensor::Zero(1, Z));
  ids_.prior_log_var = theta_.add("prior.log_var", Tensor::Zero(1, Z));
  gate_ = Mlp::create(theta_, "transition.gate", Z, {cfg_.transition_hidden}, Z, Activation::Relu, rng);
  proposal_ = Mlp::create(theta_, "transition.proposal", Z, {cfg_.transition_hidden}, Z,
                          Activation::Relu, rng);
  ids_.skip_weight = theta_.add("transition.skip.w", Tensor::Identity(Z, Z));
  ids_.skip_bias = theta_.add("transition.skip.b", Tensor::Zero(1, Z));
  trans_var_ = Linear::create(theta_, "transition.log_var", Z, Z, rng);
  emission_ = Mlp::create(theta_, "emission", Z, cfg_.emission_hidden, 2 * F, Activation::Tanh, rng);

  forward_ = GruCell::create(phi_, "inference.forward", F, H, rng);
  backward_ = GruCell::create(phi_, "inference.backward", F, H, rng);
  ids_.start_token = phi_.add("inference.start", Tensor::Zero(1, Z));
  combine0_ = Linear::create(phi_, "inference.combine0", Z + 2 * H, H, rng);
  q0_mean_ = Linear::create(phi_, "inference.q0.mean", H, Z, rng);
  q0_log_var_ = Linear::create(phi_, "inference.q0.log_var", H, Z, rng);
  combine_ = Linear::create(phi_, "inference.combine", Z + 2 * H, H, rng);
  q_mean_ = Linear::create(phi_, "inference.q.mean", H, Z, rng);
  q_log_var_ = Linear::create(phi_, "inference.q.log_var", H, Z, rng);
}

GaussianVar DmmModel::initial_prior(Tape& tape, Eigen::Index rows) const {
  Graph g{tape, theta_};
  Var m = ad::broadcast_rows(g[ids_.prior_mean], rows);
  Var lv = ad::broadcast_rows(ad::clamp_min(g[ids_.prior_log_var], log_variance_floor()), rows);
  return {m, lv};
}

GaussianVar DmmModel::transition(Tape& tape, Var z_prev) const {
  Graph g{tape, theta_};
  Var gate = ad::sigmoid(gate_(g, z_prev));
  Var h = proposal_(g, z_prev);
  Var skip = ad::add(ad::matmul(z_prev, g[ids_.skip_weight]), g[ids_.skip_bias]);
  Var mean = ad::add(ad::mul(ad::one_minus(gate), skip), ad::mul(gate, h));
  Var lv = ad::clamp(trans_var_(g, ad::relu(h)), log_variance_floor(), std::log(kTransitionVarianceCeiling));
  return {mean, lv};
}

GaussianVar DmmModel::emission(Tape& tape, Var z) const {
  Graph g{tape, theta_};
  Var out = emission_(g, z);
  const Eigen::Index F = cfg_.feature_dim;
  return {ad::slice_cols(out, 0, F), ad::clamp_min(ad::slice_cols(out, F, F), log_variance_floor())};
}

GaussianVar DmmModel::split_heads(Tape& tape, Var hidden, bool initial) const {
  Graph g{tape, phi_};
  const Linear& mh = initial ? q0_mean_ : q_mean_;
  const Linear& vh = initial ? q0_log_var_ : q_log_var_;
  return {mh(g, hidden), ad::clamp_min(vh(g, hidden), log_variance_floor())};
}

LatentPath DmmModel::infer(Tape& tape, std::span<const Tensor> x, std::span<const Tensor> eps) const {
  const std::size_t T = x.size();
  if (T == 0) throw std::invalid_argument("infer: empty sequence");
  if (eps.size() != T) throw std::invalid_argument("infer: need one noise block per frame");
  const Eigen::Index B = x.front().rows();
  const Eigen::Index H = cfg_.inference_dim;
  Graph g{tape, phi_};

  std::vector<Var> inputs;
  inputs.reserve(T);
  for (const auto& xt : x) {
    if (xt.rows() != B || xt.cols() != cfg_.feature_dim)
      throw std::invalid_argument("infer: frame shape " + shape_string(xt) + " does not match model");
    inputs.push_back(tape.constant(xt));
  }
  std::vector<Var> fwd(T), bwd(T);
  Var h = tape.constant(Tensor::Zero(B, H));
  for (std::size_t t = 0; t < T; ++t) fwd[t] = h = forward_(g, inputs[t], h);
  h = tape.constant(Tensor::Zero(B, H));
  for (std::size_t t = T; t-- > 0;) bwd[t] = h = backward_(g, inputs[t], h);

  LatentPath path;
  Var start = ad::broadcast_rows(g[ids_.start_token], B);
  const Var first[] = {start, fwd[T - 1], bwd[0]};
  GaussianVar q = split_heads(tape, ad::tanh(combine0_(g, ad::concat_cols(first))), true);
  for (std::size_t t = 0;; ++t) {
    if (eps[t].rows() != B || eps[t].cols() != cfg_.latent_dim)
      throw std::invalid_argument("infer: eps shape " + shape_string(eps[t]) + " does not match");
    Var z = ad::reparam_sample(q.mean, q.log_var, eps[t]);
    path.posteriors.push_back(q);
    path.samples.push_back(z);
    if (t + 1 == T) break;
    const Var parts[] = {z, fwd[t + 1], bwd[t + 1]};
    q = split_heads(tape, ad::tanh(combine_(g, ad::concat_cols(parts))), false);
  }
  return path;
}

Checkpoint to_checkpoint(const DmmModel& model, std::optional<NormalizationStats> stats) {
  Checkpoint c;
  c.kind = kDmmKind;
  c.config = to_json(model.config());
  c.stats = std::move(stats);
  c.groups.push_back({"generative", model.generative()});
  c.groups.push_back({"inference", model.inference()});
  return c;
}

DmmModel dmm_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != kDmmKind) throw CheckpointError("checkpoint holds a '" + ckpt.kind + "' model, not a dmm");
  DmmConfig cfg;
  try {
    cfg = dmm_config_from_json(ckpt.config);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad dmm config: ") + e.what());
  }
  DmmModel model(cfg);
  assign_params(model.generative(), ckpt.group("generative"));
  assign_params(model.inference(), ckpt.group("inference"));
  return model;
}

}  // namespace dmmpose
