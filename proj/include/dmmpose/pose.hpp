#pragma once

#include "dmmpose/tensor.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dmmpose {

using Point2 = Eigen::Vector2d;

// Kinematic tree over named 2D joints. The root (parent == self) is the head.
class Skeleton {
 public:
  Skeleton() = default;
  Skeleton(std::vector<std::string> joint_names, std::vector<int> parents);

  // head, neck, shoulders, elbows, wrists
  static Skeleton upper_body();

  int num_joints() const { return static_cast<int>(names_.size()); }
  int root() const { return root_; }
  int parent(int j) const { return parents_.at(static_cast<std::size_t>(j)); }
  const std::vector<std::string>& joint_names() const { return names_; }
  const std::vector<int>& parents() const { return parents_; }
  // Joints ordered so that every parent precedes its children.
  const std::vector<int>& topological_order() const { return order_; }
  // (parent, child) pairs for every non-root joint.
  std::vector<std::pair<int, int>> limbs() const;
  std::optional<int> find(std::string_view name) const;

  bool operator==(const Skeleton& other) const {
    return names_ == other.names_ && parents_ == other.parents_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<int> parents_;
  std::vector<int> order_;
  int root_ = 0;
};

// Provenance attached to forecast outputs.
struct ForecastOrigin {
  std::string source_id;
  std::string method;
  int sample_index = 0;
  int split_frame = 0;

  bool operator==(const ForecastOrigin&) const = default;
};

// T frames of J joints. Row t of `frames` is [x0, y0, x1, y1, ...] in pixels.
struct PoseSequence {
  std::string id;
  double fps = 10.0;
  Skeleton skeleton;
  Tensor frames;
  std::optional<std::vector<int>> actions;
  std::optional<ForecastOrigin> origin;

  int num_frames() const { return static_cast<int>(frames.rows()); }
  int num_joints() const { return skeleton.num_joints(); }
  Point2 joint(int t, int j) const { return {frames(t, 2 * j), frames(t, 2 * j + 1)}; }
  void set_joint(int t, int j, const Point2& p) {
    frames(t, 2 * j) = p.x();
    frames(t, 2 * j + 1) = p.y();
  }

  // Frames [start, start + count) with labels sliced alongside.
  PoseSequence slice(int start, int count) const;

  // Throws std::invalid_argument if an invariant is broken.
  void validate(std::optional<int> num_classes = std::nullopt) const;

  bool operator==(const PoseSequence&) const = default;
};

// Inverse of center_and_scale: pixel = normalized * height + origin.
struct CenterScale {
  Point2 origin = Point2::Zero();
  double height = 1.0;

  Point2 to_pixels(const Point2& p) const { return p * height + origin; }
};

// Relative encoding: columns 0-1 hold the head velocity, then two columns per
// non-root joint (in joint index order) hold the offset from its parent.
struct FeatureSequence {
  Tensor features;
  Point2 initial_head = Point2::Zero();
  CenterScale transform;
  double fps = 10.0;
  bool standardized = false;

  int num_frames() const { return static_cast<int>(features.rows()); }
  int num_features() const { return static_cast<int>(features.cols()); }
};

struct NormalizationStats {
  Vector mean;
  Vector std;

  bool operator==(const NormalizationStats& o) const { return mean == o.mean && std == o.std; }
};

// Triangular weighted moving average over an odd window; weights are
// renormalized over the frames available near the ends.
PoseSequence smooth_sequence(const PoseSequence& seq, int window);

struct CenteredSequence {
  PoseSequence sequence;
  CenterScale transform;
};

// Moves the centroid of all joints over all frames to the origin and divides
// by the largest per-frame vertical extent.
CenteredSequence center_and_scale(const PoseSequence& seq);
PoseSequence restore_pixels(const PoseSequence& normalized, const CenterScale& transform);

FeatureSequence parametrize(const PoseSequence& seq, const Skeleton& skeleton);

// Cumulative head positions from `initial_head`, then parent + offset for the
// remaining joints. Standardized input needs `stats`. The result stays in
// the coordinates of `initial_head`; apply restore_pixels for pixel space.
PoseSequence deparametrize(const FeatureSequence& f, const Skeleton& skeleton,
                           const Point2& initial_head,
                           const NormalizationStats* stats = nullptr);

// Pooled per-feature mean and population standard deviation over every frame
// of every sequence. Features with (numerically) zero spread get std 1.
NormalizationStats compute_stats(std::span<const FeatureSequence> dataset);
FeatureSequence standardize(const FeatureSequence& f, const NormalizationStats& stats);
FeatureSequence destandardize(const FeatureSequence& f, const NormalizationStats& stats);

}  // namespace dmmpose
