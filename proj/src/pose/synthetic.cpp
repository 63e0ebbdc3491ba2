#include "dmmpose/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace dmmpose {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRestShoulder = 0.2;
constexpr double kRestElbow = 0.1;

// Shoulder and elbow angles per arm, measured from straight down.
struct ArmAngles {
  double left_shoulder = kRestShoulder;
  double left_elbow = kRestElbow;
  double right_shoulder = kRestShoulder;
  double right_elbow = kRestElbow;
};

struct Components {
  ArmAngles arms;
  double sway = 0.0;      // horizontal offset of the whole body, px
  double velocity = 0.0;  // horizontal body velocity, px/s
};

struct ActorStyle {
  double limb_scale = 1.0;
  double wave_period = 1.0;
  double reach_angle = 1.5;
  double swing_period = 1.2;
};

struct Segment {
  Action action = Action::Wave;
  double start = 0.0;   // start of the cross-fade into this action
  double clock = 0.0;   // origin of the action's local time
  double end = 0.0;
  double direction = 1.0;
};

Components lerp(const Components& a, const Components& b, double w) {
  auto mix = [w](double x, double y) { return (1.0 - w) * x + w * y; };
  Components c;
  c.arms.left_shoulder = mix(a.arms.left_shoulder, b.arms.left_shoulder);
  c.arms.left_elbow = mix(a.arms.left_elbow, b.arms.left_elbow);
  c.arms.right_shoulder = mix(a.arms.right_shoulder, b.arms.right_shoulder);
  c.arms.right_elbow = mix(a.arms.right_elbow, b.arms.right_elbow);
  c.sway = mix(a.sway, b.sway);
  c.velocity = mix(a.velocity, b.velocity);
  return c;
}

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

Components evaluate(const Segment& seg, double t, const ActorStyle& style,
                    const SyntheticConfig& cfg) {
  const double tau = t - seg.clock;
  Components c;
  switch (seg.action) {
    case Action::Wave: {
      const double phase = std::sin(kTwoPi * tau / style.wave_period);
      c.arms.right_shoulder = 2.6 + 0.15 * phase;
      c.arms.right_elbow = 0.5 + 0.5 * phase;
      break;
    }
    case Action::Reach: {
      const double ramp = smoothstep(tau / 1.0);
      c.arms.left_shoulder = kRestShoulder + ramp * (style.reach_angle - kRestShoulder);
      c.arms.right_shoulder = c.arms.left_shoulder;
      c.arms.left_elbow = kRestElbow * (1.0 - ramp);
      c.arms.right_elbow = c.arms.left_elbow;
      break;
    }
    case Action::Sway:
      c.sway = cfg.sway_amplitude_px * std::sin(kTwoPi * tau / cfg.sway_period_s);
      break;
    case Action::Walk: {
      const double swing = 0.35 * std::sin(kTwoPi * tau / style.swing_period);
      c.arms.left_shoulder = kRestShoulder + swing;
      c.arms.right_shoulder = kRestShoulder - swing;
      c.velocity = seg.direction * cfg.walk_speed_px_s;
      break;
    }
  }
  return c;
}

class SequenceBuilder {
 public:
  SequenceBuilder(const SyntheticConfig& cfg, const ActorStyle& style, Rng& rng)
      : cfg_(cfg), style_(style), rng_(rng) {}

  PoseSequence build(std::string id) {
    const int T = std::max(1, static_cast<int>(std::lround(cfg_.seconds * cfg_.fps)));
    const Skeleton skel = Skeleton::upper_body();
    PoseSequence seq;
    seq.id = std::move(id);
    seq.fps = cfg_.fps;
    seq.skeleton = skel;
    seq.frames = Tensor::Zero(T, 2 * skel.num_joints());
    seq.actions = std::vector<int>(static_cast<std::size_t>(T));

    std::uniform_real_distribution<double> ux(0.4 * cfg_.image_width, 0.6 * cfg_.image_width);
    std::uniform_real_distribution<double> uy(0.3 * cfg_.image_height, 0.4 * cfg_.image_height);
    body_x_ = ux(rng_);
    body_y_ = uy(rng_);
    current_ = new_segment(draw_first_action(), 0.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    for (int k = 0; k < T; ++k) {
      const double t = k / cfg_.fps;
      while (t >= current_.end) advance();
      Components c = evaluate(current_, t, style_, cfg_);
      if (previous_ && previous_->action != current_.action && cfg_.crossfade_s > 0) {
        const double w = std::clamp((t - current_.start) / cfg_.crossfade_s, 0.0, 1.0);
        if (w < 1.0) c = lerp(evaluate(*previous_, t, style_, cfg_), c, w);
      }
      if (k > 0) body_x_ += c.velocity / cfg_.fps;
      place_joints(seq, k, c);
      (*seq.actions)[static_cast<std::size_t>(k)] = static_cast<int>(current_.action);
    }
    if (cfg_.noise_px > 0)
      for (Eigen::Index i = 0; i < seq.frames.size(); ++i)
        seq.frames.data()[i] += cfg_.noise_px * noise(rng_);
    return seq;
  }

 private:
  Action draw_first_action() {
    if (cfg_.forced_action) return *cfg_.forced_action;
    std::uniform_int_distribution<int> u(0, kNumActions - 1);
    return static_cast<Action>(u(rng_));
  }

  double draw_duration() {
    std::uniform_real_distribution<double> u(cfg_.min_action_s, cfg_.max_action_s);
    return u(rng_);
  }

  double walk_direction() const { return body_x_ < 0.5 * cfg_.image_width ? 1.0 : -1.0; }

  Segment new_segment(Action a, double start) {
    Segment s;
    s.action = a;
    s.start = start;
    s.clock = start;
    s.end = start + draw_duration();
    s.direction = walk_direction();
    return s;
  }

  void advance() {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const bool stay = u(rng_) < cfg_.self_transition_prob;
    Action next = current_.action;
    if (cfg_.forced_action) {
      next = *cfg_.forced_action;
    } else if (!stay) {
      std::uniform_int_distribution<int> pick(0, kNumActions - 2);
      int a = pick(rng_);
      if (a >= static_cast<int>(current_.action)) ++a;
      next = static_cast<Action>(a);
    }
    if (next == current_.action) {
      current_.end += draw_duration();
      current_.direction = walk_direction();
      return;
    }
    previous_ = current_;
    current_ = new_segment(next, current_.end);
  }

  void place_joints(PoseSequence& seq, int k, const Components& c) const {
    const double s = cfg_.body_scale * style_.limb_scale;
    const Point2 head(body_x_ + c.sway, body_y_);
    const Point2 neck = head + Point2(0, 35 * s);
    const Point2 ls = neck + Point2(-32 * s, 8 * s);
    const Point2 rs = neck + Point2(32 * s, 8 * s);
    auto limb = [](double angle, double side) { return Point2(side * std::sin(angle), std::cos(angle)); };
    const Point2 le = ls + 45 * s * limb(c.arms.left_shoulder, -1.0);
    const Point2 re = rs + 45 * s * limb(c.arms.right_shoulder, 1.0);
    const Point2 lw = le + 40 * s * limb(c.arms.left_shoulder + c.arms.left_elbow, -1.0);
    const Point2 rw = re + 40 * s * limb(c.arms.right_shoulder + c.arms.right_elbow, 1.0);
    const Point2 joints[] = {head, neck, ls, rs, le, re, lw, rw};
    for (int j = 0; j < 8; ++j) seq.set_joint(k, j, joints[j]);
  }

  const SyntheticConfig& cfg_;
  const ActorStyle& style_;
  Rng& rng_;
  double body_x_ = 0.0;
  double body_y_ = 0.0;
  Segment current_;
  std::optional<Segment> previous_;
};

ActorStyle draw_style(const SyntheticConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> limb(1.0 - cfg.limb_variation, 1.0 + cfg.limb_variation);
  std::uniform_real_distribution<double> wave(0.8, 1.25);
  std::uniform_real_distribution<double> reach(1.3, 1.7);
  std::uniform_real_distribution<double> swing(1.0, 1.4);
  ActorStyle s;
  s.limb_scale = limb(rng);
  s.wave_period = cfg.wave_period_s * wave(rng);
  s.reach_angle = reach(rng);
  s.swing_period = swing(rng);
  return s;
}

}  // namespace

std::string_view action_name(Action a) {
  switch (a) {
    case Action::Wave: return "wave";
    case Action::Reach: return "reach";
    case Action::Sway: return "sway";
    case Action::Walk: return "walk";
  }
  return "unknown";
}

void SyntheticConfig::validate() const {
  if (num_sequences < 1 || num_actors < 1) throw std::invalid_argument("synthetic: counts must be positive");
  if (!(seconds > 0) || !(fps > 0)) throw std::invalid_argument("synthetic: duration and fps must be positive");
  if (noise_px < 0 || limb_variation < 0 || limb_variation >= 1)
    throw std::invalid_argument("synthetic: noise and limb variation must be non-negative (variation < 1)");
  if (!(min_action_s > 0) || max_action_s < min_action_s)
    throw std::invalid_argument("synthetic: invalid action duration range");
  if (crossfade_s < 0) throw std::invalid_argument("synthetic: crossfade must be non-negative");
  if (self_transition_prob < 0 || self_transition_prob > 1)
    throw std::invalid_argument("synthetic: self_transition_prob must lie in [0, 1]");
  if (!(sway_period_s > 0) || !(wave_period_s > 0) || !(body_scale > 0))
    throw std::invalid_argument("synthetic: periods and scale must be positive");
}

int actor_of(int index, const SyntheticConfig& cfg) { return index % cfg.num_actors; }

std::vector<PoseSequence> generate_synthetic_dataset(const SyntheticConfig& cfg,
                                                     std::uint64_t seed) {
  cfg.validate();
  std::vector<ActorStyle> styles;
  for (int a = 0; a < cfg.num_actors; ++a) {
    Rng rng = derive_rng(seed, 0x100000000ull + static_cast<std::uint64_t>(a));
    styles.push_back(draw_style(cfg, rng));
  }
  std::vector<PoseSequence> out;
  out.reserve(static_cast<std::size_t>(cfg.num_sequences));
  for (int i = 0; i < cfg.num_sequences; ++i) {
    Rng rng = derive_rng(seed, static_cast<std::uint64_t>(i));
    const int actor = actor_of(i, cfg);
    char id[32];
    std::snprintf(id, sizeof id, "a%02d_s%04d", actor, i);
    SequenceBuilder builder(cfg, styles[static_cast<std::size_t>(actor)], rng);
    out.push_back(builder.build(id));
  }
  return out;
}

}  // namespace dmmpose
