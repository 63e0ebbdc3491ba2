#include "dmmpose/baselines.hpp"

#include "dmmpose/state_space.hpp"

#include <cmath>
#include <stdexcept>

namespace dmmpose {

using nlohmann::json;

namespace {

struct Spec {
  std::vector<Eigen::Index> pre, lstm, post;
};

Spec architecture(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::SingleRecurrent: return {{}, {128}, {}};
    case BaselineKind::Erd: return {{500, 500}, {1000, 1000}, {500, 100}};
    case BaselineKind::Stacked3: return {{500}, {1000, 1000, 1000}, {}};
    case BaselineKind::ZeroVelocity: break;
  }
  throw std::invalid_argument("zero_velocity has no trainable layers");
}

}  // namespace

std::string_view baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::ZeroVelocity: return "zero_velocity";
    case BaselineKind::SingleRecurrent: return "single_recurrent";
    case BaselineKind::Erd: return "erd";
    case BaselineKind::Stacked3: return "stacked3";
  }
  return "unknown";
}

BaselineKind parse_baseline_kind(std::string_view name) {
  for (auto k : {BaselineKind::ZeroVelocity, BaselineKind::SingleRecurrent, BaselineKind::Erd,
                 BaselineKind::Stacked3})
    if (baseline_name(k) == name) return k;
  throw std::invalid_argument("unknown baseline '" + std::string(name) + "'");
}

PoseSequence zero_velocity_forecast(const PoseSequence& observed, int horizon) {
  if (horizon < 1) throw std::invalid_argument("zero_velocity_forecast: horizon must be >= 1");
  if (observed.num_frames() < 1) throw std::invalid_argument("zero_velocity_forecast: empty observed window");
  PoseSequence out = observed;
  out.frames = observed.frames.bottomRows(1).replicate(horizon, 1);
  out.actions.reset();
  return out;
}

void RecurrentConfig::validate() const {
  if (kind == BaselineKind::ZeroVelocity) throw std::invalid_argument("zero_velocity is not a recurrent model");
  if (feature_dim < 1) throw std::invalid_argument("recurrent config: feature_dim must be positive");
  if (!(width_scale > 0)) throw std::invalid_argument("recurrent config: width_scale must be positive");
}

json to_json(const RecurrentConfig& c) {
  return json{{"kind", baseline_name(c.kind)},
              {"feature_dim", c.feature_dim},
              {"width_scale", c.width_scale},
              {"seed", c.seed},
              {"train", to_json(c.train)}};
}

RecurrentConfig recurrent_config_from_json(const json& j) {
  RecurrentConfig c;
  c.kind = parse_baseline_kind(j.at("kind").get<std::string>());
  c.feature_dim = j.at("feature_dim").get<Eigen::Index>();
  c.width_scale = j.at("width_scale").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.train = fit_config_from_json(j.at("train"));
  c.validate();
  return c;
}

RecurrentForecaster::RecurrentForecaster(const RecurrentConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const Spec spec = architecture(cfg_.kind);
  auto width = [&](Eigen::Index n) {
    return std::max<Eigen::Index>(1, std::lround(static_cast<double>(n) * cfg_.width_scale));
  };
  Rng rng = derive_rng(cfg_.seed, 0x62617365);
  Eigen::Index prev = cfg_.feature_dim;
  for (std::size_t i = 0; i < spec.pre.size(); ++i) {
    pre_.push_back(Linear::create(params_, "pre" + std::to_string(i), prev, width(spec.pre[i]), rng));
    prev = pre_.back().out;
  }
  for (std::size_t i = 0; i < spec.lstm.size(); ++i) {
    lstm_.push_back(LstmCell::create(params_, "lstm" + std::to_string(i), prev, width(spec.lstm[i]), rng));
    prev = lstm_.back().hidden;
  }
  for (std::size_t i = 0; i < spec.post.size(); ++i) {
    post_.push_back(Linear::create(params_, "post" + std::to_string(i), prev, width(spec.post[i]), rng));
    prev = post_.back().out;
  }
  out_ = Linear::create(params_, "out", prev, cfg_.feature_dim, rng);
}

std::vector<Eigen::Index> RecurrentForecaster::layer_widths() const {
  std::vector<Eigen::Index> w;
  for (const auto& l : pre_) w.push_back(l.out);
  for (const auto& l : lstm_) w.push_back(l.hidden);
  for (const auto& l : post_) w.push_back(l.out);
  return w;
}

RecurrentForecaster::State RecurrentForecaster::initial_state(Tape& tape, Eigen::Index rows) const {
  State s;
  for (const auto& l : lstm_)
    s.push_back({tape.constant(Tensor::Zero(rows, l.hidden)), tape.constant(Tensor::Zero(rows, l.hidden))});
  return s;
}

Var RecurrentForecaster::step(const Graph& g, Var x, State& state) const {
  for (const auto& l : pre_) x = ad::relu(l(g, x));
  for (std::size_t i = 0; i < lstm_.size(); ++i) {
    state[i] = lstm_[i](g, x, state[i]);
    x = state[i].h;
  }
  for (const auto& l : post_) x = ad::relu(l(g, x));
  return out_(g, x);
}

Var teacher_forced_loss(const Graph& g, const RecurrentForecaster& model, std::span<const Tensor> x) {
  if (x.size() < 2) throw std::invalid_argument("teacher_forced_loss: need at least two frames");
  const Eigen::Index B = x.front().rows();
  auto state = model.initial_state(g.tape, B);
  Var total;
  for (std::size_t t = 0; t + 1 < x.size(); ++t) {
    Var pred = model.step(g, g.tape.constant(x[t]), state);
    Var err = ad::sum(ad::square(ad::sub(pred, g.tape.constant(x[t + 1]))));
    total = t == 0 ? err : ad::add(total, err);
  }
  const double n = static_cast<double>((x.size() - 1) * static_cast<std::size_t>(B * x.front().cols()));
  return ad::scale(total, 1.0 / n);
}

FitLog train_recurrent(RecurrentForecaster& model, std::span<const Tensor> dataset,
                       const std::function<void(const FitLogRow&)>& on_epoch) {
  std::vector<Eigen::Index> lengths;
  for (const auto& s : dataset) {
    if (s.cols() != model.config().feature_dim)
      throw std::invalid_argument("train_recurrent: feature width does not match model");
    if (s.rows() < 2) throw std::invalid_argument("train_recurrent: sequences need at least two frames");
    lengths.push_back(s.rows());
  }
  auto loss = [&](Tape& tape, std::span<const Crop> crops, Eigen::Index W) {
    std::vector<Tensor> windows;
    for (const auto& c : crops) windows.push_back(dataset[c.sequence].middleRows(c.start, W));
    return teacher_forced_loss(Graph{tape, model.params()}, model, time_major(windows));
  };
  return fit_sequences(model.params(), lengths, model.config().train, loss,
                       std::string(baseline_name(model.config().kind)), on_epoch);
}

Tensor recurrent_forecast(const RecurrentForecaster& model, const Tensor& observed, int horizon) {
  if (horizon < 1) throw std::invalid_argument("recurrent_forecast: horizon must be >= 1");
  if (observed.rows() < 1) throw std::invalid_argument("recurrent_forecast: empty observed window");
  if (observed.cols() != model.config().feature_dim)
    throw std::invalid_argument("recurrent_forecast: feature width does not match model");
  Tape tape;
  tape.set_grad_enabled(false);
  const Graph g{tape, model.params()};
  auto state = model.initial_state(tape, 1);
  Var pred;
  for (Eigen::Index t = 0; t < observed.rows(); ++t) pred = model.step(g, tape.constant(observed.row(t)), state);
  Tensor out(horizon, observed.cols());
  for (int h = 0; h < horizon; ++h) {
    out.row(h) = pred.value();
    if (h + 1 < horizon) pred = model.step(g, pred, state);
  }
  return out;
}

Checkpoint to_checkpoint(const RecurrentForecaster& model, std::optional<NormalizationStats> stats) {
  Checkpoint c;
  c.kind = std::string(baseline_name(model.config().kind));
  c.config = to_json(model.config());
  c.stats = std::move(stats);
  c.groups.push_back({"params", model.params()});
  return c;
}

RecurrentForecaster recurrent_from_checkpoint(const Checkpoint& ckpt) {
  RecurrentConfig cfg;
  try {
    cfg = recurrent_config_from_json(ckpt.config);
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad recurrent config: ") + e.what());
  }
  if (baseline_name(cfg.kind) != ckpt.kind)
    throw CheckpointError("checkpoint kind '" + ckpt.kind + "' does not match its config");
  RecurrentForecaster model(cfg);
  assign_params(model.params(), ckpt.group("params"));
  return model;
}

}  // namespace dmmpose
