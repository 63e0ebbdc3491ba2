#pragma once

#include "dmmpose/evaluation.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dmmpose {

struct EvalOptions {
  std::vector<double> thresholds = default_pck_thresholds();
  NormalizerKind normalizer = NormalizerKind::BboxDiagonal;
  bool pck = true;
  // Set both to score continuations with the classifier.
  const ActionClassifier* classifier = nullptr;
  const NormalizationStats* classifier_stats = nullptr;
};

struct MethodResult {
  std::string method;
  int samples = 1;
  long windows = 0;
  std::optional<PckCurve> pck;  // over every continuation frame; expected PCK when samples > 1
  std::optional<AccuracyReport> frame_accuracy;
  std::optional<AccuracyReport> sequence_accuracy;  // majority label per window and sample
};

// Scores the continuations of one method window by window.
class MethodScorer {
 public:
  MethodScorer(std::string method, const EvalOptions& options);

  // `samples` continue `observed`; `truth` holds the true continuation.
  void add(const PoseSequence& observed, const PoseSequence& truth, std::span<const PoseSequence> samples);

  const MethodResult& result() const { return result_; }

 private:
  EvalOptions opt_;
  MethodResult result_;
};

struct EvalReport {
  std::vector<std::string> joint_names;
  std::vector<MethodResult> methods;
};

// Columns method, metric, joint, time_s, threshold, value. Metrics: pck or
// expected_pck per (joint | all, time, threshold); the same pooled over time
// with time_s "all"; frame_accuracy and sequence_accuracy.
std::string report_csv(const EvalReport& report);

// One row per method: samples, windows, accuracies and PCK by threshold.
nlohmann::json report_summary(const EvalReport& report);

// Shortest round-tripping decimal form.
std::string format_double(double v);

}  // namespace dmmpose
