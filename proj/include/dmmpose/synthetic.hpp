#pragma once

#include "dmmpose/pose.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace dmmpose {

enum class Action : int { Wave = 0, Reach = 1, Sway = 2, Walk = 3 };
inline constexpr int kNumActions = 4;

std::string_view action_name(Action a);

// Procedural stand-in for a labelled pose dataset: an upper-body skeleton
// performing a random walk over four actions.
struct SyntheticConfig {
  int num_sequences = 80;
  double seconds = 30.0;
  double fps = 10.0;
  int num_actors = 16;

  double noise_px = 1.0;          // std of additive coordinate noise
  double limb_variation = 0.15;   // per-actor limb lengths in [1 - v, 1 + v]
  double min_action_s = 2.0;
  double max_action_s = 6.0;
  double crossfade_s = 0.5;
  // Chance that the next segment repeats the current action; repeats
  // continue seamlessly.
  double self_transition_prob = 0.5;

  double walk_speed_px_s = 30.0;
  double sway_period_s = 2.0;
  double sway_amplitude_px = 12.0;
  double wave_period_s = 1.0;  // scaled per actor
  double body_scale = 1.0;
  double image_width = 640.0;
  double image_height = 480.0;

  // When set, every segment performs this action.
  std::optional<Action> forced_action;

  void validate() const;
};

// Actor performing sequence `index`; sequences are dealt round-robin.
int actor_of(int index, const SyntheticConfig& cfg);

// Pure function of (cfg, seed). Ids look like "a03_s0012".
std::vector<PoseSequence> generate_synthetic_dataset(const SyntheticConfig& cfg,
                                                     std::uint64_t seed);

}  // namespace dmmpose
