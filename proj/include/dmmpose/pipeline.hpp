#pragma once

#include "dmmpose/baselines.hpp"
#include "dmmpose/dmm.hpp"
#include "dmmpose/evaluation.hpp"
#include "dmmpose/pose.hpp"

#include <span>
#include <string>
#include <vector>

namespace dmmpose {

inline constexpr int kSmoothingWindow = 5;

// Smooth, center and scale, then parametrize (not standardized).
FeatureSequence prepare_features(const PoseSequence& seq, int smoothing_window = kSmoothingWindow);

// Throws std::invalid_argument unless every sequence shares one skeleton.
const Skeleton& common_skeleton(std::span<const PoseSequence> dataset);

// Stats over the prepared training sequences.
NormalizationStats training_stats(std::span<const PoseSequence> train);

// Standardized feature matrices, one per sequence.
std::vector<Tensor> model_inputs(std::span<const PoseSequence> dataset, const NormalizationStats& stats);

// Per-frame labels; throws if a sequence is unlabelled.
std::vector<std::vector<int>> frame_labels(std::span<const PoseSequence> dataset);

int frames_for(double seconds, double fps);

// Observed window of a test sequence prepared for a forecaster.
struct ObservedWindow {
  FeatureSequence features;  // standardized
  Point2 last_head;          // normalized coordinates
};

ObservedWindow prepare_observed(const PoseSequence& observed, const NormalizationStats& stats);

// Standardized H x F forecast features continuing `obs`, in pixels.
PoseSequence forecast_to_pixels(const Tensor& forecast, const ObservedWindow& obs,
                                const NormalizationStats& stats, const Skeleton& skeleton);

// S pixel-space continuations.
std::vector<PoseSequence> dmm_forecast_pixels(const DmmModel& model, const NormalizationStats& stats,
                                              const PoseSequence& observed, int horizon, int samples,
                                              std::uint64_t seed);
PoseSequence recurrent_forecast_pixels(const RecurrentForecaster& model, const NormalizationStats& stats,
                                       const PoseSequence& observed, int horizon);

// Forecast window [split - observed, split + horizon) of a source sequence.
struct ForecastWindow {
  std::size_t sequence = 0;
  int split_frame = 0;
};

// Non-overlapping windows of observed + horizon frames from the start of each
// sequence; `skipped` counts sequences too short for one window.
std::vector<ForecastWindow> forecast_windows(std::span<const PoseSequence> dataset, int observed,
                                             int horizon, int* skipped = nullptr);

// Seed for window `index` of a forecast run.
std::uint64_t window_seed(std::uint64_t seed, std::size_t index);

// Classifier frame accuracy on the continuation frames: the classifier sees
// the observed frames followed by the continuation and is scored on the
// continuation against `truth` labels.
AccuracyReport forecast_accuracy(const ActionClassifier& classifier, const NormalizationStats& stats,
                                 const PoseSequence& observed, const PoseSequence& continuation,
                                 std::span<const int> truth);

}  // namespace dmmpose
