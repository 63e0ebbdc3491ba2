#include "dmmpose/evaluation.hpp"

#include "dmmpose/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dmmpose {

using nlohmann::json;

std::string_view normalizer_name(NormalizerKind kind) {
  return kind == NormalizerKind::BboxDiagonal ? "bbox" : "torso";
}

NormalizerKind parse_normalizer(std::string_view name) {
  if (name == "bbox") return NormalizerKind::BboxDiagonal;
  if (name == "torso") return NormalizerKind::TorsoCross;
  throw std::invalid_argument("unknown normalizer '" + std::string(name) + "' (expected bbox or torso)");
}

std::vector<double> default_pck_thresholds() { return {0.05, 0.1, 0.15, 0.2, 0.3, 0.5}; }

double reference_length(const PoseSequence& gt, int t, NormalizerKind kind) {
  double len = 0.0;
  if (kind == NormalizerKind::BboxDiagonal) {
    Point2 lo = gt.joint(t, 0), hi = lo;
    for (int j = 1; j < gt.num_joints(); ++j) {
      lo = lo.cwiseMin(gt.joint(t, j));
      hi = hi.cwiseMax(gt.joint(t, j));
    }
    len = (hi - lo).norm();
  } else {
    const auto& s = gt.skeleton;
    auto lh = s.find("left_hip"), rh = s.find("right_hip"), ls = s.find("left_shoulder"),
         rs = s.find("right_shoulder");
    if (!lh || !rh || !ls || !rs)
      throw std::invalid_argument("torso normalizer needs left/right hip and shoulder joints");
    len = 0.5 * ((gt.joint(t, *lh) - gt.joint(t, *rs)).norm() + (gt.joint(t, *rh) - gt.joint(t, *ls)).norm());
  }
  if (!(len > 0))
    throw std::invalid_argument("sequence '" + gt.id + "': zero reference length at frame " + std::to_string(t));
  return len;
}

double PckCurve::value(int joint, int time, int threshold) const {
  const std::size_t T = times.size(), K = thresholds.size();
  const double c = counts[static_cast<std::size_t>(joint) * T + static_cast<std::size_t>(time)];
  return hits[(static_cast<std::size_t>(joint) * T + static_cast<std::size_t>(time)) * K +
              static_cast<std::size_t>(threshold)] / c;
}

double PckCurve::pooled(int time, int threshold) const {
  const std::size_t T = times.size(), K = thresholds.size();
  double h = 0, c = 0;
  for (int j = 0; j < num_joints; ++j) {
    const std::size_t jt = static_cast<std::size_t>(j) * T + static_cast<std::size_t>(time);
    h += hits[jt * K + static_cast<std::size_t>(threshold)];
    c += counts[jt];
  }
  return h / c;
}

double PckCurve::pooled(int threshold) const {
  const std::size_t K = thresholds.size();
  double h = 0, c = 0;
  for (std::size_t jt = 0; jt < counts.size(); ++jt) {
    h += hits[jt * K + static_cast<std::size_t>(threshold)];
    c += counts[jt];
  }
  return h / c;
}

PckCurve& PckCurve::operator+=(const PckCurve& o) {
  if (o.thresholds != thresholds || o.times != times || o.num_joints != num_joints ||
      o.normalizer != normalizer)
    throw std::invalid_argument("pck: cannot merge curves over different grids");
  for (std::size_t i = 0; i < hits.size(); ++i) hits[i] += o.hits[i];
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
  return *this;
}

PckCurve pck(const PoseSequence& pred, const PoseSequence& gt, std::span<const double> thresholds,
             std::span<const double> times, NormalizerKind normalizer) {
  if (pred.num_frames() != gt.num_frames() || pred.num_joints() != gt.num_joints())
    throw std::invalid_argument("pck: prediction and ground truth are not aligned");
  if (thresholds.empty()) throw std::invalid_argument("pck: no thresholds");
  PckCurve c;
  c.thresholds.assign(thresholds.begin(), thresholds.end());
  c.normalizer = normalizer;
  c.num_joints = gt.num_joints();
  std::vector<int> frames;
  if (times.empty()) {
    for (int h = 0; h < gt.num_frames(); ++h) {
      frames.push_back(h);
      c.times.push_back((h + 1) / gt.fps);
    }
  } else {
    for (double s : times) {
      const int h = static_cast<int>(std::lround(s * gt.fps)) - 1;
      if (h < 0 || h >= gt.num_frames())
        throw std::invalid_argument("pck: time " + std::to_string(s) + " s lies outside the forecast");
      frames.push_back(h);
      c.times.push_back(s);
    }
  }
  const std::size_t T = frames.size(), K = thresholds.size();
  c.hits.assign(static_cast<std::size_t>(c.num_joints) * T * K, 0.0);
  c.counts.assign(static_cast<std::size_t>(c.num_joints) * T, 0.0);
  for (std::size_t ti = 0; ti < T; ++ti) {
    const int h = frames[ti];
    const double ref = reference_length(gt, h, normalizer);
    for (int j = 0; j < c.num_joints; ++j) {
      const double d = (pred.joint(h, j) - gt.joint(h, j)).norm();
      const std::size_t jt = static_cast<std::size_t>(j) * T + ti;
      c.counts[jt] += 1.0;
      for (std::size_t k = 0; k < K; ++k)
        if (d <= thresholds[k] * ref) c.hits[jt * K + k] += 1.0;
    }
  }
  return c;
}

PckCurve expected_pck(std::span<const PoseSequence> samples, const PoseSequence& gt,
                      std::span<const double> thresholds, std::span<const double> times,
                      NormalizerKind normalizer) {
  if (samples.empty()) throw std::invalid_argument("expected_pck: no samples");
  PckCurve acc = pck(samples.front(), gt, thresholds, times, normalizer);
  for (std::size_t s = 1; s < samples.size(); ++s) {
    const PckCurve c = pck(samples[s], gt, thresholds, times, normalizer);
    for (std::size_t i = 0; i < acc.hits.size(); ++i) acc.hits[i] += c.hits[i];
  }
  const double n = static_cast<double>(samples.size());
  for (double& h : acc.hits) h /= n;
  return acc;
}

std::vector<double> l2_curve(const PoseSequence& pred, const PoseSequence& gt) {
  if (pred.num_frames() != gt.num_frames() || pred.num_joints() != gt.num_joints())
    throw std::invalid_argument("l2_curve: prediction and ground truth are not aligned");
  std::vector<double> out(static_cast<std::size_t>(gt.num_frames()), 0.0);
  for (int t = 0; t < gt.num_frames(); ++t) {
    for (int j = 0; j < gt.num_joints(); ++j) out[static_cast<std::size_t>(t)] += (pred.joint(t, j) - gt.joint(t, j)).norm();
    out[static_cast<std::size_t>(t)] /= gt.num_joints();
  }
  return out;
}

DriftDemo drift_demo(const PoseSequence& gt, double jitter_sigma, double drift_sigma, std::uint64_t seed) {
  if (gt.num_frames() < 1) throw std::invalid_argument("drift_demo: empty ground truth");
  Rng rng = derive_rng(seed, 0x6472);
  DriftDemo d;
  d.jitter = gt;
  d.jitter.frames += jitter_sigma * standard_normal(gt.num_frames(), gt.frames.cols(), rng);
  d.drift = gt;
  Point2 offset = Point2::Zero();
  for (int t = 0; t < gt.num_frames(); ++t) {
    const Tensor step = drift_sigma * standard_normal(1, 2, rng);
    offset += Point2(step(0, 0), step(0, 1));
    for (int j = 0; j < gt.num_joints(); ++j) d.drift.set_joint(t, j, gt.joint(t, j) + offset);
  }
  d.jitter_l2 = l2_curve(d.jitter, gt);
  d.drift_l2 = l2_curve(d.drift, gt);
  for (std::size_t t = 0; t < d.drift_l2.size(); ++t)
    if (d.drift_l2[t] > d.jitter_l2[t]) {
      d.crossover = static_cast<int>(t);
      break;
    }
  return d;
}

void ClassifierConfig::validate() const {
  if (feature_dim < 1 || num_classes < 1 || recurrent_dim < 1 || hidden_dim < 1)
    throw std::invalid_argument("classifier config: sizes must be positive");
}

json to_json(const ClassifierConfig& c) {
  return json{{"feature_dim", c.feature_dim}, {"num_classes", c.num_classes},
              {"recurrent_dim", c.recurrent_dim}, {"hidden_dim", c.hidden_dim},
              {"seed", c.seed},                 {"train", to_json(c.train)}};
}

ClassifierConfig classifier_config_from_json(const json& j) {
  ClassifierConfig c;
  c.feature_dim = j.at("feature_dim").get<Eigen::Index>();
  c.num_classes = j.at("num_classes").get<int>();
  c.recurrent_dim = j.at("recurrent_dim").get<Eigen::Index>();
  c.hidden_dim = j.at("hidden_dim").get<Eigen::Index>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.train = fit_config_from_json(j.at("train"));
  c.validate();
  return c;
}

ActionClassifier::ActionClassifier(const ClassifierConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng = derive_rng(cfg_.seed, 0x636c73);
  const Eigen::Index H = cfg_.recurrent_dim;
  fwd1_ = GruCell::create(params_, "gru1.forward", cfg_.feature_dim, H, rng);
  bwd1_ = GruCell::create(params_, "gru1.backward", cfg_.feature_dim, H, rng);
  fwd2_ = GruCell::create(params_, "gru2.forward", 2 * H, H, rng);
  bwd2_ = GruCell::create(params_, "gru2.backward", 2 * H, H, rng);
  fc1_ = Linear::create(params_, "fc1", 2 * H, cfg_.hidden_dim, rng);
  fc2_ = Linear::create(params_, "fc2", cfg_.hidden_dim, cfg_.hidden_dim, rng);
  out_ = Linear::create(params_, "out", cfg_.hidden_dim, cfg_.num_classes, rng);
}

namespace {

std::vector<Var> bidirectional(const Graph& g, const GruCell& fwd, const GruCell& bwd,
                               const std::vector<Var>& x) {
  const std::size_t T = x.size();
  const Eigen::Index B = x.front().rows();
  std::vector<Var> f(T), b(T), out(T);
  Var h = g.tape.constant(Tensor::Zero(B, fwd.hidden));
  for (std::size_t t = 0; t < T; ++t) f[t] = h = fwd(g, x[t], h);
  h = g.tape.constant(Tensor::Zero(B, bwd.hidden));
  for (std::size_t t = T; t-- > 0;) b[t] = h = bwd(g, x[t], h);
  for (std::size_t t = 0; t < T; ++t) {
    const Var parts[] = {f[t], b[t]};
    out[t] = ad::concat_cols(parts);
  }
  return out;
}

}  // namespace

std::vector<Var> ActionClassifier::logits(const Graph& g, std::span<const Tensor> x) const {
  if (x.empty()) throw std::invalid_argument("classifier: empty sequence");
  std::vector<Var> in;
  for (const auto& xt : x) {
    if (xt.cols() != cfg_.feature_dim) throw std::invalid_argument("classifier: feature width mismatch");
    in.push_back(g.tape.constant(xt));
  }
  auto h = bidirectional(g, fwd2_, bwd2_, bidirectional(g, fwd1_, bwd1_, in));
  std::vector<Var> out;
  for (Var v : h) out.push_back(out_(g, ad::relu(fc2_(g, ad::relu(fc1_(g, v))))));
  return out;
}

Var classifier_loss(const Graph& g, const ActionClassifier& model, std::span<const Tensor> x,
                    const std::vector<std::vector<int>>& labels) {
  if (labels.size() != x.size()) throw std::invalid_argument("classifier_loss: one label row per frame");
  const auto logits = model.logits(g, x);
  Var total;
  for (std::size_t t = 0; t < x.size(); ++t) {
    for (int l : labels[t])
      if (l < 0 || l >= model.config().num_classes)
        throw std::invalid_argument("classifier: label " + std::to_string(l) + " out of range");
    Var ce = ad::sum(ad::softmax_cross_entropy_rows(logits[t], labels[t]));
    total = t == 0 ? ce : ad::add(total, ce);
  }
  return ad::scale(total, 1.0 / static_cast<double>(x.size() * static_cast<std::size_t>(x.front().rows())));
}

FitLog train_classifier(ActionClassifier& model, std::span<const Tensor> features,
                        std::span<const std::vector<int>> labels,
                        const std::function<void(const FitLogRow&)>& on_epoch) {
  if (features.size() != labels.size())
    throw std::invalid_argument("train_classifier: features and labels differ in count");
  std::vector<Eigen::Index> lengths;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (static_cast<Eigen::Index>(labels[i].size()) != features[i].rows())
      throw std::invalid_argument("train_classifier: label count does not match frames");
    for (int l : labels[i])
      if (l < 0 || l >= model.config().num_classes)
        throw std::invalid_argument("train_classifier: label " + std::to_string(l) + " out of range");
    lengths.push_back(features[i].rows());
  }
  auto loss = [&](Tape& tape, std::span<const Crop> crops, Eigen::Index W) {
    std::vector<Tensor> windows;
    std::vector<std::vector<int>> lab(static_cast<std::size_t>(W));
    for (const auto& c : crops) {
      windows.push_back(features[c.sequence].middleRows(c.start, W));
      for (Eigen::Index t = 0; t < W; ++t)
        lab[static_cast<std::size_t>(t)].push_back(labels[c.sequence][static_cast<std::size_t>(c.start + t)]);
    }
    return classifier_loss(Graph{tape, model.params()}, model, time_major(windows), lab);
  };
  return fit_sequences(model.params(), lengths, model.config().train, loss, "classifier", on_epoch);
}

std::vector<int> classify_frames(const ActionClassifier& model, const Tensor& features) {
  Tape tape;
  tape.set_grad_enabled(false);
  const auto logits = model.logits(Graph{tape, model.params()}, time_major(features));
  std::vector<int> out;
  for (const Var& l : logits) {
    Eigen::Index k;
    l.value().row(0).maxCoeff(&k);
    out.push_back(static_cast<int>(k));
  }
  return out;
}

AccuracyReport score_predictions(std::span<const int> predicted, std::span<const int> truth, int num_classes) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("score: length mismatch");
  AccuracyReport r;
  r.confusion.assign(static_cast<std::size_t>(num_classes), std::vector<long>(static_cast<std::size_t>(num_classes), 0));
  long correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= num_classes || predicted[i] < 0 || predicted[i] >= num_classes)
      throw std::invalid_argument("score: label out of range");
    ++r.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
    correct += predicted[i] == truth[i];
  }
  r.frames = static_cast<long>(truth.size());
  r.accuracy = r.frames ? static_cast<double>(correct) / r.frames : 0.0;
  return r;
}

AccuracyReport& merge(AccuracyReport& into, const AccuracyReport& more) {
  if (into.confusion.empty()) return into = more;
  if (more.confusion.size() != into.confusion.size()) throw std::invalid_argument("merge: class counts differ");
  long correct = 0;
  for (std::size_t a = 0; a < into.confusion.size(); ++a) {
    for (std::size_t b = 0; b < into.confusion.size(); ++b) into.confusion[a][b] += more.confusion[a][b];
    correct += into.confusion[a][a];
  }
  into.frames += more.frames;
  into.accuracy = into.frames ? static_cast<double>(correct) / into.frames : 0.0;
  return into;
}

AccuracyReport classify_accuracy(const ActionClassifier& model, std::span<const Tensor> features,
                                 std::span<const std::vector<int>> labels) {
  if (features.size() != labels.size()) throw std::invalid_argument("classify_accuracy: count mismatch");
  AccuracyReport total;
  for (std::size_t i = 0; i < features.size(); ++i)
    merge(total, score_predictions(classify_frames(model, features[i]), labels[i], model.config().num_classes));
  return total;
}

int majority_label(std::span<const int> labels, int num_classes) {
  if (labels.empty()) throw std::invalid_argument("majority_label: no labels");
  std::vector<int> count(static_cast<std::size_t>(num_classes), 0);
  for (int l : labels) ++count.at(static_cast<std::size_t>(l));
  return static_cast<int>(std::max_element(count.begin(), count.end()) - count.begin());
}

Checkpoint to_checkpoint(const ActionClassifier& model, std::optional<NormalizationStats> stats) {
  Checkpoint c;
  c.kind = kClassifierKind;
  c.config = to_json(model.config());
  c.stats = std::move(stats);
  c.groups.push_back({"params", model.params()});
  return c;
}

ActionClassifier classifier_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != kClassifierKind)
    throw CheckpointError("checkpoint holds a '" + ckpt.kind + "' model, not a classifier");
  ClassifierConfig cfg;
  try {
    cfg = classifier_config_from_json(ckpt.config);
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad classifier config: ") + e.what());
  }
  ActionClassifier model(cfg);
  assign_params(model.params(), ckpt.group("params"));
  return model;
}

}  // namespace dmmpose
