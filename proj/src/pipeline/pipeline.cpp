#include "dmmpose/pipeline.hpp"

#include "dmmpose/state_space.hpp"

#include <cmath>
#include <stdexcept>

namespace dmmpose {

FeatureSequence prepare_features(const PoseSequence& seq, int smoothing_window) {
  const CenteredSequence c = center_and_scale(smooth_sequence(seq, smoothing_window));
  FeatureSequence f = parametrize(c.sequence, seq.skeleton);
  f.transform = c.transform;
  return f;
}

const Skeleton& common_skeleton(std::span<const PoseSequence> dataset) {
  if (dataset.empty()) throw std::invalid_argument("dataset is empty");
  for (const auto& s : dataset)
    if (!(s.skeleton == dataset.front().skeleton))
      throw std::invalid_argument("sequence '" + s.id + "' uses a different skeleton from '" +
                                  dataset.front().id + "'");
  return dataset.front().skeleton;
}

NormalizationStats training_stats(std::span<const PoseSequence> train) {
  common_skeleton(train);
  std::vector<FeatureSequence> f;
  for (const auto& s : train) f.push_back(prepare_features(s));
  return compute_stats(f);
}

std::vector<Tensor> model_inputs(std::span<const PoseSequence> dataset, const NormalizationStats& stats) {
  std::vector<Tensor> out;
  for (const auto& s : dataset) out.push_back(standardize(prepare_features(s), stats).features);
  return out;
}

std::vector<std::vector<int>> frame_labels(std::span<const PoseSequence> dataset) {
  std::vector<std::vector<int>> out;
  for (const auto& s : dataset) {
    if (!s.actions) throw std::invalid_argument("sequence '" + s.id + "' has no action labels");
    out.push_back(*s.actions);
  }
  return out;
}

int frames_for(double seconds, double fps) {
  if (!(seconds > 0) || !(fps > 0)) throw std::invalid_argument("durations and fps must be positive");
  return static_cast<int>(std::lround(seconds * fps));
}

ObservedWindow prepare_observed(const PoseSequence& observed, const NormalizationStats& stats) {
  const CenteredSequence c = center_and_scale(smooth_sequence(observed, kSmoothingWindow));
  FeatureSequence f = parametrize(c.sequence, observed.skeleton);
  f.transform = c.transform;
  return {standardize(f, stats), c.sequence.joint(c.sequence.num_frames() - 1, observed.skeleton.root())};
}

PoseSequence forecast_to_pixels(const Tensor& forecast, const ObservedWindow& obs,
                                const NormalizationStats& stats, const Skeleton& skeleton) {
  FeatureSequence f;
  f.features = forecast;
  f.fps = obs.features.fps;
  f.standardized = true;
  PoseSequence out = restore_pixels(deparametrize(f, skeleton, obs.last_head, &stats), obs.features.transform);
  out.fps = obs.features.fps;
  return out;
}

std::vector<PoseSequence> dmm_forecast_pixels(const DmmModel& model, const NormalizationStats& stats,
                                              const PoseSequence& observed, int horizon, int samples,
                                              std::uint64_t seed) {
  const ObservedWindow obs = prepare_observed(observed, stats);
  ForecastOptions opt;
  opt.horizon = horizon;
  opt.samples = samples;
  opt.seed = seed;
  std::vector<PoseSequence> out;
  for (const Tensor& f : forecast(model, obs.features.features, opt))
    out.push_back(forecast_to_pixels(f, obs, stats, observed.skeleton));
  return out;
}

PoseSequence recurrent_forecast_pixels(const RecurrentForecaster& model, const NormalizationStats& stats,
                                       const PoseSequence& observed, int horizon) {
  const ObservedWindow obs = prepare_observed(observed, stats);
  return forecast_to_pixels(recurrent_forecast(model, obs.features.features, horizon), obs, stats,
                            observed.skeleton);
}

std::vector<ForecastWindow> forecast_windows(std::span<const PoseSequence> dataset, int observed,
                                             int horizon, int* skipped) {
  if (observed < 1 || horizon < 1) throw std::invalid_argument("observed and horizon frames must be positive");
  std::vector<ForecastWindow> out;
  int short_count = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const int T = dataset[i].num_frames();
    if (T < observed + horizon) ++short_count;
    for (int start = 0; start + observed + horizon <= T; start += observed + horizon)
      out.push_back({i, start + observed});
  }
  if (skipped) *skipped = short_count;
  return out;
}

std::uint64_t window_seed(std::uint64_t seed, std::size_t index) {
  Rng rng = derive_rng(seed, 0x77696e00 + static_cast<std::uint64_t>(index));
  return rng();
}

AccuracyReport forecast_accuracy(const ActionClassifier& classifier, const NormalizationStats& stats,
                                 const PoseSequence& observed, const PoseSequence& continuation,
                                 std::span<const int> truth) {
  if (static_cast<int>(truth.size()) != continuation.num_frames())
    throw std::invalid_argument("forecast_accuracy: one label per continuation frame");
  PoseSequence joined = observed;
  joined.actions.reset();
  joined.frames.conservativeResize(observed.num_frames() + continuation.num_frames(), Eigen::NoChange);
  joined.frames.bottomRows(continuation.num_frames()) = continuation.frames;
  const Tensor x = standardize(prepare_features(joined), stats).features;
  const std::vector<int> pred = classify_frames(classifier, x);
  const std::span<const int> tail(pred.data() + observed.num_frames(), truth.size());
  return score_predictions(tail, truth, classifier.config().num_classes);
}

}  // namespace dmmpose
