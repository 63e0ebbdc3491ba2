#include "dmmpose/pose.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dmmpose {

Skeleton::Skeleton(std::vector<std::string> joint_names, std::vector<int> parents)
    : names_(std::move(joint_names)), parents_(std::move(parents)) {
  const int J = static_cast<int>(names_.size());
  if (J < 2) throw std::invalid_argument("skeleton needs at least two joints");
  if (static_cast<int>(parents_.size()) != J)
    throw std::invalid_argument("skeleton: parents and joint names differ in length");
  int roots = 0;
  for (int j = 0; j < J; ++j) {
    const int p = parents_[static_cast<std::size_t>(j)];
    if (p < 0 || p >= J) throw std::invalid_argument("skeleton: parent index out of range");
    if (p == j) {
      root_ = j;
      ++roots;
    }
  }
  if (roots != 1) throw std::invalid_argument("skeleton: expected exactly one root joint");
  // Breadth-first from the root; anything unreached sits on a cycle.
  order_.push_back(root_);
  for (std::size_t k = 0; k < order_.size(); ++k)
    for (int j = 0; j < J; ++j)
      if (j != root_ && parents_[static_cast<std::size_t>(j)] == order_[k]) order_.push_back(j);
  if (static_cast<int>(order_.size()) != J)
    throw std::invalid_argument("skeleton: parent pointers do not form a tree");
}

Skeleton Skeleton::upper_body() {
  return Skeleton({"head", "neck", "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
                   "left_wrist", "right_wrist"},
                  {0, 0, 1, 1, 2, 3, 4, 5});
}

std::vector<std::pair<int, int>> Skeleton::limbs() const {
  std::vector<std::pair<int, int>> out;
  for (int j = 0; j < num_joints(); ++j)
    if (j != root_) out.emplace_back(parent(j), j);
  return out;
}

std::optional<int> Skeleton::find(std::string_view name) const {
  for (int j = 0; j < num_joints(); ++j)
    if (names_[static_cast<std::size_t>(j)] == name) return j;
  return std::nullopt;
}

PoseSequence PoseSequence::slice(int start, int count) const {
  if (start < 0 || count < 1 || start + count > num_frames())
    throw std::invalid_argument("slice [" + std::to_string(start) + ", +" + std::to_string(count) +
                                ") out of range for " + std::to_string(num_frames()) + " frames");
  PoseSequence out = *this;
  out.frames = frames.middleRows(start, count);
  if (actions)
    out.actions = std::vector<int>(actions->begin() + start, actions->begin() + start + count);
  return out;
}

void PoseSequence::validate(std::optional<int> num_classes) const {
  if (num_frames() < 1) throw std::invalid_argument("sequence '" + id + "' has no frames");
  if (frames.cols() != 2 * num_joints())
    throw std::invalid_argument("sequence '" + id + "': frame width does not match skeleton");
  if (!(fps > 0)) throw std::invalid_argument("sequence '" + id + "': fps must be positive");
  if (!frames.allFinite()) throw std::invalid_argument("sequence '" + id + "': non-finite coordinate");
  if (actions) {
    if (static_cast<int>(actions->size()) != num_frames())
      throw std::invalid_argument("sequence '" + id + "': action count does not match frames");
    for (int a : *actions)
      if (a < 0 || (num_classes && a >= *num_classes))
        throw std::invalid_argument("sequence '" + id + "': action label out of range");
  }
}

PoseSequence smooth_sequence(const PoseSequence& seq, int window) {
  if (window < 1 || window % 2 == 0)
    throw std::invalid_argument("smoothing window must be a positive odd integer");
  const int half = window / 2;
  const int T = seq.num_frames();
  PoseSequence out = seq;
  for (int t = 0; t < T; ++t) {
    out.frames.row(t).setZero();
    double total = 0.0;
    for (int k = -half; k <= half; ++k) {
      const int s = t + k;
      if (s < 0 || s >= T) continue;
      const double w = static_cast<double>(half + 1 - std::abs(k));
      out.frames.row(t) += w * seq.frames.row(s);
      total += w;
    }
    out.frames.row(t) /= total;
  }
  return out;
}

CenteredSequence center_and_scale(const PoseSequence& seq) {
  const int T = seq.num_frames();
  const int J = seq.num_joints();
  double height = 0.0;
  for (int t = 0; t < T; ++t) {
    double lo = seq.frames(t, 1), hi = seq.frames(t, 1);
    for (int j = 1; j < J; ++j) {
      lo = std::min(lo, seq.frames(t, 2 * j + 1));
      hi = std::max(hi, seq.frames(t, 2 * j + 1));
    }
    height = std::max(height, hi - lo);
  }
  if (!(height > 0))
    throw std::invalid_argument("sequence '" + seq.id + "' has zero pose height");
  Point2 centroid = Point2::Zero();
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < J; ++j) centroid += seq.joint(t, j);
  centroid /= static_cast<double>(T * J);

  CenteredSequence out{seq, {centroid, height}};
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < J; ++j) out.sequence.set_joint(t, j, (seq.joint(t, j) - centroid) / height);
  return out;
}

PoseSequence restore_pixels(const PoseSequence& normalized, const CenterScale& transform) {
  PoseSequence out = normalized;
  for (int t = 0; t < out.num_frames(); ++t)
    for (int j = 0; j < out.num_joints(); ++j)
      out.set_joint(t, j, transform.to_pixels(normalized.joint(t, j)));
  return out;
}

FeatureSequence parametrize(const PoseSequence& seq, const Skeleton& skeleton) {
  if (seq.frames.cols() != 2 * skeleton.num_joints())
    throw std::invalid_argument("parametrize: sequence has " + std::to_string(seq.frames.cols() / 2) +
                                " joints but skeleton has " +
                                std::to_string(skeleton.num_joints()));
  if (seq.num_frames() < 1) throw std::invalid_argument("parametrize: empty sequence");
  const int T = seq.num_frames();
  const int J = skeleton.num_joints();
  const int root = skeleton.root();
  FeatureSequence f;
  f.features = Tensor::Zero(T, 2 * J);
  f.initial_head = seq.joint(0, root);
  f.fps = seq.fps;
  for (int t = 0; t < T; ++t) {
    if (t > 0) f.features.row(t).head<2>() = (seq.joint(t, root) - seq.joint(t - 1, root)).transpose();
    int col = 2;
    for (int j = 0; j < J; ++j) {
      if (j == root) continue;
      f.features.row(t).segment<2>(col) =
          (seq.joint(t, j) - seq.joint(t, skeleton.parent(j))).transpose();
      col += 2;
    }
  }
  return f;
}

PoseSequence deparametrize(const FeatureSequence& f, const Skeleton& skeleton,
                           const Point2& initial_head, const NormalizationStats* stats) {
  const int J = skeleton.num_joints();
  if (f.num_features() != 2 * J)
    throw std::invalid_argument("deparametrize: feature width does not match skeleton");
  if (f.standardized && !stats)
    throw std::invalid_argument("deparametrize: standardized features need normalization stats");
  const Tensor raw = f.standardized ? destandardize(f, *stats).features : f.features;

  // Column of each non-root joint's offset.
  std::vector<int> column(static_cast<std::size_t>(J), -1);
  int col = 2;
  for (int j = 0; j < J; ++j)
    if (j != skeleton.root()) {
      column[static_cast<std::size_t>(j)] = col;
      col += 2;
    }

  PoseSequence out;
  out.skeleton = skeleton;
  out.fps = f.fps;
  out.frames = Tensor::Zero(raw.rows(), 2 * J);
  Point2 head = initial_head;
  for (int t = 0; t < raw.rows(); ++t) {
    head += raw.row(t).head<2>().transpose();
    out.set_joint(t, skeleton.root(), head);
    for (int j : skeleton.topological_order()) {
      if (j == skeleton.root()) continue;
      const Point2 offset = raw.row(t).segment<2>(column[static_cast<std::size_t>(j)]).transpose();
      out.set_joint(t, j, out.joint(t, skeleton.parent(j)) + offset);
    }
  }
  return out;
}

NormalizationStats compute_stats(std::span<const FeatureSequence> dataset) {
  if (dataset.empty()) throw std::invalid_argument("compute_stats: empty dataset");
  const Eigen::Index F = dataset.front().features.cols();
  Vector sum = Vector::Zero(F);
  double n = 0.0;
  for (const auto& f : dataset) {
    if (f.features.cols() != F) throw std::invalid_argument("compute_stats: feature widths differ");
    sum += f.features.colwise().sum().transpose();
    n += static_cast<double>(f.features.rows());
  }
  if (n == 0) throw std::invalid_argument("compute_stats: dataset has no frames");
  NormalizationStats stats;
  stats.mean = sum / n;
  Vector sq = Vector::Zero(F);
  for (const auto& f : dataset)
    sq += (f.features.rowwise() - stats.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  stats.std = (sq / n).cwiseSqrt();
  for (Eigen::Index k = 0; k < F; ++k)
    if (!(stats.std[k] > 1e-12)) stats.std[k] = 1.0;
  return stats;
}

FeatureSequence standardize(const FeatureSequence& f, const NormalizationStats& stats) {
  if (f.standardized) throw std::invalid_argument("standardize: features already standardized");
  if (stats.mean.size() != f.features.cols())
    throw std::invalid_argument("standardize: stats width does not match features");
  FeatureSequence out = f;
  out.features = ((f.features.rowwise() - stats.mean.transpose()).array().rowwise() /
                  stats.std.transpose().array())
                     .matrix();
  out.standardized = true;
  return out;
}

FeatureSequence destandardize(const FeatureSequence& f, const NormalizationStats& stats) {
  if (stats.mean.size() != f.features.cols())
    throw std::invalid_argument("destandardize: stats width does not match features");
  FeatureSequence out = f;
  out.features = ((f.features.array().rowwise() * stats.std.transpose().array()).matrix().rowwise() +
                  stats.mean.transpose());
  out.standardized = false;
  return out;
}

}  // namespace dmmpose
