#pragma once

#include "dmmpose/synthetic.hpp"

#include <cstdint>
#include <string>

namespace dmmpose::cli {

struct CommonOptions {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
};

struct GenerateOptions {
  CommonOptions common;
  SyntheticConfig synthetic;
  double train_fraction = 0.75;
  double val_fraction = 0.0;
  double test_fraction = 0.25;
};

struct TrainOptions {
  CommonOptions common;
  std::string dataset;
  std::string split;
  std::string model = "dmm";
  double width_scale = 1.0;
  int epochs = 10;
  int batch_size = 8;
  int window = 100;
  double learning_rate = 1e-3;
  double clip_norm = 10.0;
  long kl_warmup_steps = 5000;
  int samples_per_sequence = 1;
  long latent_dim = 50;
  long inference_dim = 50;
  long hidden_dim = 100;
  long recurrent_dim = 50;
  long classifier_hidden = 50;
};

struct ForecastOptions {
  CommonOptions common;
  std::string dataset;
  std::string split;
  std::string checkpoint;
  std::string subset = "test";
  double observed_seconds = 3.0;
  double horizon_seconds = 7.5;
  int samples = 5;
  bool sample_emission = false;
};

struct EvaluateOptions {
  CommonOptions common;
  std::string dataset;
  std::string forecasts;  // comma-separated files
  std::string classifier;
  std::string thresholds = "0.05,0.1,0.15,0.2,0.3,0.5";
  std::string normalizer = "bbox";
  std::string metrics = "all";
  double observed_seconds = 3.0;
};

void cmd_generate(const GenerateOptions& opt);
void cmd_train(const TrainOptions& opt);
void cmd_forecast(const ForecastOptions& opt);
void cmd_evaluate(const EvaluateOptions& opt);

}  // namespace dmmpose::cli
