#pragma once

#include "dmmpose/autodiff.hpp"
#include "dmmpose/params.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace dmmpose {

// Settings shared by the supervised sequence models (baselines, classifier).
struct FitConfig {
  int epochs = 10;
  int batch_size = 8;
  int window = 100;
  double learning_rate = 1e-3;
  double clip_norm = 10.0;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const FitConfig& cfg);
FitConfig fit_config_from_json(const nlohmann::json& j);

struct FitLogRow {
  int epoch = 0;
  long step = 0;
  double loss = 0.0;  // mean over the epoch's batches
};
using FitLog = std::vector<FitLogRow>;

// One training crop: sequence index and first frame.
struct Crop {
  std::size_t sequence = 0;
  Eigen::Index start = 0;
};

// Builds the mean loss of a batch of equally long crops.
using CropLoss = std::function<Var(Tape&, std::span<const Crop>, Eigen::Index length)>;

// Minibatch Adam over random crops of min(window, shortest) frames, one crop
// per sequence per epoch in shuffled order. Throws TrainingError (see
// state_space.hpp) on a non-finite loss.
FitLog fit_sequences(ParamSet& params, std::span<const Eigen::Index> lengths, const FitConfig& cfg,
                     const CropLoss& loss, const std::string& what,
                     const std::function<void(const FitLogRow&)>& on_epoch = {});

}  // namespace dmmpose
