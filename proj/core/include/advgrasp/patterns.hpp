#pragma once

#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "advgrasp/environment.hpp"
#include "advgrasp/rng.hpp"

namespace advgrasp {

enum class PatternKind {
  line,
  sine,
  circle,
  arc,
  oval,
  random_waypoint,
  random_action,
};

PatternKind pattern_kind_from_string(const std::string& s);
const char* to_string(PatternKind k);

// Scripted-training set and the held-out set the evaluation protocol uses.
const std::vector<PatternKind>& train_pattern_kinds();
const std::vector<PatternKind>& test_pattern_kinds();

// Plate rotation command stream. Training episodes turn at one constant rate;
// held-out episodes redraw the rate every step around an episode-fixed mean.
enum class RotationMode { constant_rate, gaussian_rate };

struct PatternSamplerConfig {
  double sine_amp_min = 0.05, sine_amp_max = 0.2;       // m
  double sine_freq_min = 0.5, sine_freq_max = 2.0;      // rad per m of abscissa
  double circle_radius_min = 0.05, circle_radius_max = 0.15;
  double arc_span_min = std::numbers::pi / 2.0;
  double arc_span_max = 1.5 * std::numbers::pi;
  double oval_axis_min = 0.05, oval_axis_max = 0.2;
  double heading_jitter = 0.3;       // rad per step, random_action walk
  double rotation_rate_max = 1.0;    // constant mode: |rate| bound
  double rotation_mean_max = 0.5;    // gaussian mode: episode mean bound
  double rotation_std = 0.25;        // gaussian mode: per-step std
  double min_path_length = 0.3;      // m; open curves shorter than this resample
};

// One sampled episode curve. Open curves (line, sine, arc) fold back on
// themselves at path_length so the plate never parks at a dead end.
struct PatternSpec {
  PatternKind kind = PatternKind::line;
  Vec2 start;
  double direction = 0.0;         // line heading / sine row rotation / oval tilt
  double amplitude = 0.0;         // sine
  double frequency = 0.0;         // sine, rad per meter of abscissa
  Vec2 center;                    // circle / arc / oval
  double radius = 0.0;            // circle / arc
  double radius_b = 0.0;          // oval minor semi-axis (radius is the major)
  double start_angle = 0.0;       // circle / arc / oval
  double span = 0.0;              // arc, radians
  int orbit_dir = 1;              // +1 counter-clockwise, -1 clockwise
  double heading_jitter = 0.3;    // random_action turn bound per step
  double path_length = std::numeric_limits<double>::infinity();
  RotationMode rotation_mode = RotationMode::constant_rate;
  double rotation_rate = 0.0;     // constant mode
  double rotation_mean = 0.0;     // gaussian mode
  double rotation_std = 0.0;
  std::uint64_t runtime_seed = 0;  // waypoint / heading / rotation stream
};

PatternSpec sample_pattern(PatternKind kind, Rng& rng, const Area2& area,
                           const PatternSamplerConfig& cfg = {},
                           RotationMode rotation = RotationMode::constant_rate);

// Reference curve point for the given parameter s. For line, sine and arc,
// s >= 0 is folded into [0, path_length] (triangle wave). Parameter meaning:
// arc length for line / circle / arc, abscissa for sine, ellipse angle for
// oval. Curve kinds only; waypoint and action walks have no fixed curve.
Vec2 reference_point(const PatternSpec& spec, double s);

bool is_curve(PatternKind k);

// Emits plate commands that track the sampled curve at the plate's speed
// budget, or the sampled waypoint / heading walk for the stochastic kinds.
class PatternPolicy {
 public:
  PatternPolicy(const PatternSpec& spec, const EnvConfig& env);

  MoverAction act(const WorldState& ws);

  double param() const { return s_; }

 private:
  PatternSpec spec_;
  double step_len_;  // plate travel budget per step, m
  double s_ = 0.0;   // unfolded curve parameter
  Rng rng_;
  Vec2 waypoint_;
  bool have_waypoint_ = false;
  double heading_ = 0.0;
  double rotation_rate_ = 0.0;
};

}  // namespace advgrasp
