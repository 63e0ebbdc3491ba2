#pragma once

#include "dmmpose/checkpoint.hpp"
#include "dmmpose/fit.hpp"
#include "dmmpose/layers.hpp"
#include "dmmpose/pose.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dmmpose {

// ---- keypoint accuracy ----

enum class NormalizerKind { BboxDiagonal, TorsoCross };

std::string_view normalizer_name(NormalizerKind kind);
NormalizerKind parse_normalizer(std::string_view name);  // "bbox" or "torso"

std::vector<double> default_pck_thresholds();

// Reference length of ground-truth frame t. TorsoCross needs joints named
// left_hip, right_hip, left_shoulder and right_shoulder.
double reference_length(const PoseSequence& gt, int t, NormalizerKind kind);

// Correct-keypoint counts per (joint, time, threshold). `hits` may be
// fractional after averaging over samples; PCK = hits / counts.
struct PckCurve {
  std::vector<double> thresholds;
  std::vector<double> times;  // forecast offsets in seconds
  NormalizerKind normalizer = NormalizerKind::BboxDiagonal;
  int num_joints = 0;
  std::vector<double> hits;    // [joint][time][threshold]
  std::vector<double> counts;  // [joint][time]

  double value(int joint, int time, int threshold) const;
  // Over all joints, weighted by counts.
  double pooled(int time, int threshold) const;
  // Over all joints and times.
  double pooled(int threshold) const;

  // Adds the counts of another curve over the same grid.
  PckCurve& operator+=(const PckCurve& other);
};

// pred frame h is the forecast at offset (h + 1) / fps. `times` selects
// offsets (rounded to the nearest frame); empty means every frame.
// Distances at exactly the threshold count as correct.
PckCurve pck(const PoseSequence& pred, const PoseSequence& gt, std::span<const double> thresholds,
             std::span<const double> times, NormalizerKind normalizer);

// Mean of the per-sample curves.
PckCurve expected_pck(std::span<const PoseSequence> samples, const PoseSequence& gt,
                      std::span<const double> thresholds, std::span<const double> times,
                      NormalizerKind normalizer);

// Mean joint distance per frame.
std::vector<double> l2_curve(const PoseSequence& pred, const PoseSequence& gt);

// ---- drift versus jitter ----

struct DriftDemo {
  PoseSequence jitter;  // gt + independent N(0, jitter_sigma^2) per joint and frame
  PoseSequence drift;   // gt + whole-pose random walk with N(0, drift_sigma^2) steps
  std::vector<double> jitter_l2;
  std::vector<double> drift_l2;
  // First frame where the drift curve lies above the jitter curve.
  std::optional<int> crossover;
};

DriftDemo drift_demo(const PoseSequence& gt, double jitter_sigma = 20.0, double drift_sigma = 3.0,
                     std::uint64_t seed = 0);

// ---- action classifier ----

struct ClassifierConfig {
  Eigen::Index feature_dim = 16;
  int num_classes = 4;
  Eigen::Index recurrent_dim = 50;
  Eigen::Index hidden_dim = 50;
  std::uint64_t seed = 0;
  FitConfig train;

  void validate() const;
};

nlohmann::json to_json(const ClassifierConfig& cfg);
ClassifierConfig classifier_config_from_json(const nlohmann::json& j);

// Two stacked bidirectional GRU layers, two ReLU FC layers and a per-frame
// linear output over the action classes.
class ActionClassifier {
 public:
  explicit ActionClassifier(const ClassifierConfig& cfg);

  const ClassifierConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  // Per-frame class scores for a time-major batch.
  std::vector<Var> logits(const Graph& g, std::span<const Tensor> x) const;

 private:
  ClassifierConfig cfg_;
  ParamSet params_;
  GruCell fwd1_, bwd1_, fwd2_, bwd2_;
  Linear fc1_, fc2_, out_;
};

// Mean per-frame cross-entropy; labels[t][b].
Var classifier_loss(const Graph& g, const ActionClassifier& model, std::span<const Tensor> x,
                    const std::vector<std::vector<int>>& labels);

FitLog train_classifier(ActionClassifier& model, std::span<const Tensor> features,
                        std::span<const std::vector<int>> labels,
                        const std::function<void(const FitLogRow&)>& on_epoch = {});

std::vector<int> classify_frames(const ActionClassifier& model, const Tensor& features);

struct AccuracyReport {
  double accuracy = 0.0;
  long frames = 0;
  std::vector<std::vector<long>> confusion;  // [true][predicted]
};

AccuracyReport score_predictions(std::span<const int> predicted, std::span<const int> truth,
                                 int num_classes);
AccuracyReport& merge(AccuracyReport& into, const AccuracyReport& more);

// Frame accuracy over sequences (features are classifier inputs).
AccuracyReport classify_accuracy(const ActionClassifier& model, std::span<const Tensor> features,
                                 std::span<const std::vector<int>> labels);

// Most frequent label; ties go to the smaller class index.
int majority_label(std::span<const int> labels, int num_classes);

Checkpoint to_checkpoint(const ActionClassifier& model, std::optional<NormalizationStats> stats = {});
ActionClassifier classifier_from_checkpoint(const Checkpoint& ckpt);

inline constexpr const char* kClassifierKind = "classifier";

}  // namespace dmmpose
