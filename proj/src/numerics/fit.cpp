#include "dmmpose/fit.hpp"

#include "dmmpose/optimizer.hpp"
#include "dmmpose/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace dmmpose {

using nlohmann::json;

json to_json(const FitConfig& c) {
  return json{{"epochs", c.epochs},         {"batch_size", c.batch_size},
              {"window", c.window},         {"learning_rate", c.learning_rate},
              {"clip_norm", c.clip_norm},   {"seed", c.seed}};
}

FitConfig fit_config_from_json(const json& j) {
  FitConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.window = j.at("window").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

FitLog fit_sequences(ParamSet& params, std::span<const Eigen::Index> lengths, const FitConfig& cfg,
                     const CropLoss& loss, const std::string& what,
                     const std::function<void(const FitLogRow&)>& on_epoch) {
  if (lengths.empty()) throw std::invalid_argument(what + ": empty dataset");
  if (cfg.epochs < 0 || cfg.batch_size < 1 || cfg.window < 1)
    throw std::invalid_argument(what + ": invalid training configuration");
  const Eigen::Index shortest = *std::min_element(lengths.begin(), lengths.end());
  const Eigen::Index W = std::min<Eigen::Index>(cfg.window, shortest);
  if (W < 1) throw std::invalid_argument(what + ": dataset contains an empty sequence");

  AdamConfig acfg;
  acfg.learning_rate = cfg.learning_rate;
  acfg.clip_norm = cfg.clip_norm;
  Adam opt(params, acfg);
  Rng rng = derive_rng(cfg.seed, 0x666974);
  std::vector<std::size_t> order(lengths.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  FitLog log;
  long step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    int batches = 0;
    for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t last = std::min(order.size(), first + static_cast<std::size_t>(cfg.batch_size));
      std::vector<Crop> crops;
      for (std::size_t k = first; k < last; ++k) {
        std::uniform_int_distribution<Eigen::Index> start(0, lengths[order[k]] - W);
        crops.push_back({order[k], start(rng)});
      }
      Tape tape;
      Var l = loss(tape, crops, W);
      const double value = l.value()(0, 0);
      if (!std::isfinite(value)) {
        std::ostringstream os;
        os << what << ": non-finite loss at epoch " << epoch << ", batch " << batches << " (step "
           << step << "); parameter norm " << params.l2_norm();
        throw TrainingError(os.str());
      }
      try {
        opt.step(params, tape.backward(l, params));
      } catch (const std::runtime_error& e) {
        std::ostringstream os;
        os << what << ": " << e.what() << " at epoch " << epoch << ", batch " << batches
           << "; parameter norm " << params.l2_norm();
        throw TrainingError(os.str());
      }
      ++step;
      total += value;
      ++batches;
    }
    FitLogRow row{epoch, step, batches ? total / batches : 0.0};
    log.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  return log;
}

}  // namespace dmmpose
