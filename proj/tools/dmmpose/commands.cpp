#include "commands.hpp"

#include "dmmpose/baselines.hpp"
#include "dmmpose/checkpoint.hpp"
#include "dmmpose/dataset_io.hpp"
#include "dmmpose/dmm.hpp"
#include "dmmpose/evaluation.hpp"
#include "dmmpose/pipeline.hpp"
#include "dmmpose/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dmmpose::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kZeroVelocityKind = "zero_velocity";

// Records inputs, outputs and timings of one command; written last.
class Manifest {
 public:
  Manifest(std::string command, json config, std::uint64_t seed, const std::string& out)
      : command_(std::move(command)), config_(std::move(config)), seed_(seed), out_(out),
        start_(std::chrono::steady_clock::now()) {
    if (out_.empty()) throw std::invalid_argument("--out is required");
    fs::create_directories(out_);
  }

  std::string read_input(const std::string& path) {
    if (path.empty()) throw std::invalid_argument("missing input path");
    std::string bytes = read_file(path);
    inputs_.push_back({{"path", path}, {"sha256", sha256_hex(bytes)}});
    return bytes;
  }

  void write_output(const std::string& name, const std::string& bytes) {
    const fs::path p = out_ / name;
    write_file_atomic(p, bytes);
    outputs_.push_back({{"path", p.string()}, {"sha256", sha256_hex(bytes)}});
  }

  void warn(const std::string& message) {
    std::cerr << "warning: " << message << "\n";
    warnings_.push_back(message);
  }

  void set(const std::string& key, json value) { extra_[key] = std::move(value); }

  void finish() {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m{{"command", command_},
           {"versions", {{"dmmpose", kVersion}, {"checkpoint_format", 1}}},
           {"config", config_},
           {"seed", seed_},
           {"inputs", inputs_},
           {"outputs", outputs_},
           {"warnings", warnings_},
           {"timings", {{"wall_seconds", wall}}}};
    for (auto& [k, v] : extra_.items()) m[k] = v;
    write_file_atomic(out_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  std::string command_;
  json config_;
  std::uint64_t seed_;
  fs::path out_;
  std::chrono::steady_clock::time_point start_;
  json inputs_ = json::array();
  json outputs_ = json::array();
  json warnings_ = json::array();
  json extra_ = json::object();
};

json common_json(const CommonOptions& c) { return json{{"config", c.config}, {"seed", c.seed}, {"out", c.out}}; }

std::vector<PoseSequence> read_dataset(Manifest& m, const std::string& path) {
  const std::string text = m.read_input(path);
  return parse_dataset(text);
}

// Sequences of `subset` in the split file, in split order.
std::vector<PoseSequence> select_subset(const std::vector<PoseSequence>& dataset, const json& split,
                                        const std::string& subset) {
  if (!split.contains(subset)) throw std::invalid_argument("split file has no '" + subset + "' subset");
  std::map<std::string, const PoseSequence*> by_id;
  for (const auto& s : dataset) by_id[s.id] = &s;
  std::vector<PoseSequence> out;
  for (const auto& id : split.at(subset)) {
    auto it = by_id.find(id.get<std::string>());
    if (it == by_id.end()) throw std::invalid_argument("split names unknown sequence '" + id.get<std::string>() + "'");
    out.push_back(*it->second);
  }
  return out;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(what + ": " + e.what());
  }
}

std::string csv_log(const FitLog& log) {
  std::string out = "epoch,step,loss\n";
  for (const auto& r : log)
    out += std::to_string(r.epoch) + ',' + std::to_string(r.step) + ',' + format_double(r.loss) + '\n';
  return out;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

void cmd_generate(const GenerateOptions& opt) {
  const double total = opt.train_fraction + opt.val_fraction + opt.test_fraction;
  if (opt.train_fraction < 0 || opt.val_fraction < 0 || opt.test_fraction < 0 || std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must be nonnegative and sum to 1 (got " + format_double(total) + ")");
  opt.synthetic.validate();
  const SyntheticConfig& sc = opt.synthetic;
  json cfg = common_json(opt.common);
  cfg.update(json{{"num_sequences", sc.num_sequences}, {"seconds", sc.seconds}, {"fps", sc.fps},
                  {"num_actors", sc.num_actors}, {"noise_px", sc.noise_px},
                  {"train_fraction", opt.train_fraction}, {"val_fraction", opt.val_fraction},
                  {"test_fraction", opt.test_fraction}});
  Manifest m("generate", cfg, opt.common.seed, opt.common.out);

  const auto dataset = generate_synthetic_dataset(sc, opt.common.seed);

  // Whole actors go to one subset.
  std::vector<int> actors(static_cast<std::size_t>(sc.num_actors));
  std::iota(actors.begin(), actors.end(), 0);
  Rng rng = derive_rng(opt.common.seed, 0x73706c74);
  std::shuffle(actors.begin(), actors.end(), rng);
  const int n_train = static_cast<int>(std::lround(opt.train_fraction * sc.num_actors));
  const int n_val = static_cast<int>(std::lround(opt.val_fraction * sc.num_actors));
  std::map<int, std::string> subset_of;
  json split{{"train", json::array()}, {"val", json::array()}, {"test", json::array()},
             {"actors", {{"train", json::array()}, {"val", json::array()}, {"test", json::array()}}}};
  for (int i = 0; i < sc.num_actors; ++i) {
    const std::string subset = i < n_train ? "train" : i < n_train + n_val ? "val" : "test";
    subset_of[actors[static_cast<std::size_t>(i)]] = subset;
  }
  for (int a = 0; a < sc.num_actors; ++a) split["actors"][subset_of[a]].push_back(a);
  for (int i = 0; i < static_cast<int>(dataset.size()); ++i)
    split[subset_of[actor_of(i, sc)]].push_back(dataset[static_cast<std::size_t>(i)].id);

  const std::string data = serialize_dataset(dataset);
  if (parse_dataset(data) != dataset) throw std::runtime_error("generated dataset does not load back identically");
  m.write_output("dataset.jsonl", data);
  m.write_output("split.json", split.dump(2) + "\n");
  m.set("counts", {{"train", split["train"].size()}, {"val", split["val"].size()}, {"test", split["test"].size()}});
  m.finish();
}

void cmd_train(const TrainOptions& opt) {
  json cfg = common_json(opt.common);
  cfg.update(json{{"dataset", opt.dataset}, {"split", opt.split}, {"model", opt.model},
                  {"width_scale", opt.width_scale}, {"epochs", opt.epochs}, {"batch_size", opt.batch_size},
                  {"window", opt.window}, {"learning_rate", opt.learning_rate}, {"clip_norm", opt.clip_norm},
                  {"kl_warmup_steps", opt.kl_warmup_steps}, {"samples_per_sequence", opt.samples_per_sequence},
                  {"latent_dim", opt.latent_dim}, {"inference_dim", opt.inference_dim},
                  {"hidden_dim", opt.hidden_dim}, {"recurrent_dim", opt.recurrent_dim},
                  {"classifier_hidden", opt.classifier_hidden}});
  Manifest m("train", cfg, opt.common.seed, opt.common.out);
  const auto dataset = read_dataset(m, opt.dataset);
  const json split = parse_json(m.read_input(opt.split), "split file");
  const auto train = select_subset(dataset, split, "train");
  common_skeleton(dataset);
  const NormalizationStats stats = training_stats(train);
  const auto F = static_cast<Eigen::Index>(stats.mean.size());
  const std::uint64_t seed = opt.common.seed;

  FitConfig fit;
  fit.epochs = opt.epochs;
  fit.batch_size = opt.batch_size;
  fit.window = opt.window;
  fit.learning_rate = opt.learning_rate;
  fit.clip_norm = opt.clip_norm;
  fit.seed = seed;

  Checkpoint ckpt;
  std::string log;
  if (opt.model == "dmm") {
    DmmConfig c;
    c.feature_dim = F;
    c.latent_dim = opt.latent_dim;
    c.inference_dim = opt.inference_dim;
    c.emission_hidden = {opt.hidden_dim, opt.hidden_dim};
    c.transition_hidden = opt.hidden_dim;
    c.seed = seed;
    c.train.epochs = opt.epochs;
    c.train.batch_size = opt.batch_size;
    c.train.window = opt.window;
    c.train.samples_per_sequence = opt.samples_per_sequence;
    c.train.learning_rate = opt.learning_rate;
    c.train.clip_norm = opt.clip_norm;
    c.train.kl_warmup_steps = opt.kl_warmup_steps;
    c.train.seed = seed;
    DmmModel model(c);
    log = "epoch,step,kl_weight,elbo_per_frame,objective_per_frame,reconstruction_per_frame,kl_per_frame\n";
    dmmpose::train(model, model_inputs(train, stats), c.train, [&](const TrainLogRow& r) {
      log += std::to_string(r.epoch) + ',' + std::to_string(r.step) + ',' + format_double(r.kl_weight) + ',' +
             format_double(r.elbo_per_frame) + ',' + format_double(r.objective_per_frame) + ',' +
             format_double(r.reconstruction_per_frame) + ',' + format_double(r.kl_per_frame) + '\n';
    });
    ckpt = to_checkpoint(model, stats);
  } else if (opt.model == "classifier") {
    ClassifierConfig c;
    c.feature_dim = F;
    int classes = 0;
    for (const auto& labels : frame_labels(dataset))
      for (int l : labels) classes = std::max(classes, l + 1);
    c.num_classes = classes;
    c.recurrent_dim = opt.recurrent_dim;
    c.hidden_dim = opt.classifier_hidden;
    c.seed = seed;
    c.train = fit;
    ActionClassifier model(c);
    log = csv_log(train_classifier(model, model_inputs(train, stats), frame_labels(train)));
    ckpt = to_checkpoint(model, stats);
  } else if (opt.model == kZeroVelocityKind) {
    ckpt.kind = kZeroVelocityKind;
    ckpt.stats = stats;
    log = "epoch,step,loss\n";
  } else {
    RecurrentConfig c;
    c.kind = parse_baseline_kind(opt.model);
    if (c.kind == BaselineKind::ZeroVelocity) throw std::logic_error("unreachable");
    c.feature_dim = F;
    c.width_scale = opt.width_scale;
    c.seed = seed;
    c.train = fit;
    RecurrentForecaster model(c);
    log = csv_log(train_recurrent(model, model_inputs(train, stats)));
    ckpt = to_checkpoint(model, stats);
  }
  m.write_output("model.ckpt", serialize_checkpoint(ckpt));
  m.write_output("train_log.csv", log);
  m.finish();
}

void cmd_forecast(const ForecastOptions& opt) {
  if (opt.samples < 1) throw std::invalid_argument("--samples must be >= 1");
  json cfg = common_json(opt.common);
  cfg.update(json{{"dataset", opt.dataset}, {"split", opt.split}, {"checkpoint", opt.checkpoint},
                  {"subset", opt.subset}, {"observed_seconds", opt.observed_seconds},
                  {"horizon_seconds", opt.horizon_seconds}, {"samples", opt.samples},
                  {"sample_emission", opt.sample_emission}});
  Manifest m("forecast", cfg, opt.common.seed, opt.common.out);
  const auto dataset = read_dataset(m, opt.dataset);
  const json split = parse_json(m.read_input(opt.split), "split file");
  const Checkpoint ckpt = parse_checkpoint(m.read_input(opt.checkpoint));
  auto sequences = select_subset(dataset, split, opt.subset);
  std::sort(sequences.begin(), sequences.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  if (sequences.empty()) throw std::invalid_argument("subset '" + opt.subset + "' is empty");
  const double fps = sequences.front().fps;
  for (const auto& s : sequences)
    if (s.fps != fps) throw std::invalid_argument("sequence '" + s.id + "' has a different frame rate");
  const int O = frames_for(opt.observed_seconds, fps);
  const int H = frames_for(opt.horizon_seconds, fps);

  std::optional<DmmModel> dmm;
  std::optional<RecurrentForecaster> rnn;
  std::string method = ckpt.kind;
  if (ckpt.kind == kDmmKind) {
    dmm.emplace(dmm_from_checkpoint(ckpt));
  } else if (ckpt.kind == kClassifierKind) {
    throw std::invalid_argument("a classifier checkpoint cannot forecast");
  } else if (ckpt.kind != kZeroVelocityKind) {
    rnn.emplace(recurrent_from_checkpoint(ckpt));
  }
  if ((dmm || rnn) && !ckpt.stats) throw CheckpointError("checkpoint has no normalization stats");
  const int samples = dmm ? opt.samples : 1;

  int skipped = 0;
  const auto windows = forecast_windows(sequences, O, H, &skipped);
  if (skipped > 0) m.warn(std::to_string(skipped) + " sequences are shorter than observed + horizon and were skipped");

  std::vector<PoseSequence> out;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const PoseSequence& src = sequences[windows[w].sequence];
    const int split_frame = windows[w].split_frame;
    const PoseSequence observed = src.slice(split_frame - O, O);
    std::vector<PoseSequence> cont;
    if (dmm)
      cont = dmm_forecast_pixels(*dmm, *ckpt.stats, observed, H, samples, window_seed(opt.common.seed, w));
    else if (rnn)
      cont.push_back(recurrent_forecast_pixels(*rnn, *ckpt.stats, observed, H));
    else
      cont.push_back(zero_velocity_forecast(observed, H));
    for (int s = 0; s < samples; ++s) {
      PoseSequence p = cont[static_cast<std::size_t>(s)];
      p.id = src.id + "@" + std::to_string(split_frame) + "/" + std::to_string(s);
      p.fps = src.fps;
      p.skeleton = src.skeleton;
      p.actions.reset();
      p.origin = ForecastOrigin{src.id, method, s, split_frame};
      p.validate();
      out.push_back(std::move(p));
    }
  }
  m.write_output("forecasts.jsonl", serialize_dataset(out));
  m.set("windows", windows.size());
  m.set("samples_per_window", samples);
  m.set("skipped_sequences", skipped);
  m.finish();
}

void cmd_evaluate(const EvaluateOptions& opt) {
  const bool want_pck = opt.metrics == "pck" || opt.metrics == "all";
  const bool want_cls = opt.metrics == "classifier" || opt.metrics == "all";
  if (!want_pck && !want_cls) throw std::invalid_argument("--metrics must be pck, classifier or all");
  if (want_cls && opt.classifier.empty()) throw std::invalid_argument("classifier metrics need --classifier");
  std::vector<double> thresholds;
  for (const auto& t : split_commas(opt.thresholds)) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size() || !(v > 0)) throw std::invalid_argument("bad threshold '" + t + "'");
    thresholds.push_back(v);
  }
  if (thresholds.empty()) throw std::invalid_argument("--thresholds is empty");
  const std::vector<std::string> forecast_files = split_commas(opt.forecasts);
  if (forecast_files.empty()) throw std::invalid_argument("--forecasts names no files");

  json cfg = common_json(opt.common);
  cfg.update(json{{"dataset", opt.dataset}, {"forecasts", opt.forecasts}, {"classifier", opt.classifier},
                  {"thresholds", thresholds}, {"normalizer", opt.normalizer}, {"metrics", opt.metrics},
                  {"observed_seconds", opt.observed_seconds}});
  Manifest m("evaluate", cfg, opt.common.seed, opt.common.out);
  const auto dataset = read_dataset(m, opt.dataset);
  std::map<std::string, const PoseSequence*> gt;
  for (const auto& s : dataset) gt[s.id] = &s;

  std::optional<ActionClassifier> classifier;
  std::optional<NormalizationStats> cls_stats;
  if (want_cls) {
    const Checkpoint c = parse_checkpoint(m.read_input(opt.classifier));
    classifier.emplace(classifier_from_checkpoint(c));
    if (!c.stats) throw CheckpointError("classifier checkpoint has no normalization stats");
    cls_stats = c.stats;
  }
  EvalOptions eo;
  eo.thresholds = thresholds;
  eo.normalizer = parse_normalizer(opt.normalizer);
  eo.pck = want_pck;
  if (classifier) {
    eo.classifier = &*classifier;
    eo.classifier_stats = &*cls_stats;
  }

  // method -> (source, split) -> samples by index
  using WindowKey = std::pair<std::string, int>;
  std::vector<std::string> order;
  std::map<std::string, std::map<WindowKey, std::map<int, PoseSequence>>> by_method;
  for (const auto& file : forecast_files) {
    for (auto& f : parse_dataset(m.read_input(file))) {
      if (!f.origin) throw std::invalid_argument("forecast '" + f.id + "' has no provenance");
      const ForecastOrigin o = *f.origin;
      if (!gt.count(o.source_id))
        throw std::invalid_argument("no ground truth for forecast source '" + o.source_id + "'");
      if (!by_method.count(o.method)) order.push_back(o.method);
      auto& slot = by_method[o.method][{o.source_id, o.split_frame}];
      if (!slot.emplace(o.sample_index, std::move(f)).second)
        throw std::invalid_argument("duplicate forecast sample for '" + o.source_id + "'");
    }
  }
  if (order.empty()) throw std::invalid_argument("no forecasts to evaluate");

  // Reference rows use the windows of the first method.
  const auto& ref_windows = by_method.at(order.front());
  const std::string zv = kZeroVelocityKind;
  std::vector<std::string> methods{"ground_truth"};
  if (!by_method.count(zv)) methods.push_back(zv);
  for (const auto& name : order) methods.push_back(name);

  EvalReport report;
  report.joint_names = dataset.front().skeleton.joint_names();
  for (const auto& name : methods) {
    MethodScorer scorer(name, eo);
    const bool internal = name == "ground_truth" || !by_method.count(name);
    const auto& windows = internal ? ref_windows : by_method.at(name);
    for (const auto& [key, samples] : windows) {
      const PoseSequence& src = *gt.at(key.first);
      const int H = samples.begin()->second.num_frames();
      const int O = frames_for(opt.observed_seconds, src.fps);
      if (key.second < O || key.second + H > src.num_frames())
        throw std::invalid_argument("forecast window at frame " + std::to_string(key.second) + " of '" + src.id +
                                    "' does not fit the ground truth");
      const PoseSequence observed = src.slice(key.second - O, O);
      const PoseSequence truth = src.slice(key.second, H);
      std::vector<PoseSequence> cont;
      if (name == "ground_truth") {
        cont.push_back(truth);
      } else if (internal) {
        cont.push_back(zero_velocity_forecast(observed, H));
      } else {
        int expect = 0;
        for (const auto& [idx, seq] : samples) {
          if (idx != expect++)
            throw std::invalid_argument("forecast samples of '" + src.id + "' are not numbered 0..S-1");
          cont.push_back(seq);
        }
      }
      scorer.add(observed, truth, cont);
    }
    report.methods.push_back(scorer.result());
  }

  m.write_output("report.csv", report_csv(report));
  json summary = report_summary(report);
  summary["normalizer"] = normalizer_name(eo.normalizer);
  summary["thresholds"] = thresholds;
  summary["observed_seconds"] = opt.observed_seconds;
  m.write_output("summary.json", summary.dump(2) + "\n");
  m.finish();
}

}  // namespace dmmpose::cli
