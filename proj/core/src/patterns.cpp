#include "advgrasp/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace advgrasp {

namespace {

constexpr double kPi = std::numbers::pi;

double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

bool in_area(Vec2 p, const Area2& a) {
  return p.x >= a.x_min && p.x <= a.x_max && p.y >= a.y_min && p.y <= a.y_max;
}

Vec2 rot2(double a, Vec2 v) {
  double c = std::cos(a), s = std::sin(a);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Triangle-wave fold of s into [0, L]: out and back along the same curve.
double fold(double s, double L) {
  if (!std::isfinite(L) || L <= 0.0) return s;
  double period = 2.0 * L;
  double m = std::fmod(s, period);
  if (m < 0.0) m += period;
  return m <= L ? m : period - m;
}

Vec2 curve_point_unfolded(const PatternSpec& sp, double t) {
  switch (sp.kind) {
    case PatternKind::line: {
      Vec2 d{std::cos(sp.direction), std::sin(sp.direction)};
      return sp.start + t * d;
    }
    case PatternKind::sine: {
      Vec2 local{t, sp.amplitude * std::sin(sp.frequency * t)};
      return sp.start + rot2(sp.direction, local);
    }
    case PatternKind::circle:
    case PatternKind::arc: {
      double ang = sp.start_angle + sp.orbit_dir * t / sp.radius;
      return sp.center + Vec2{sp.radius * std::cos(ang), sp.radius * std::sin(ang)};
    }
    case PatternKind::oval: {
      double ang = sp.start_angle + sp.orbit_dir * t;
      Vec2 local{sp.radius * std::cos(ang), sp.radius_b * std::sin(ang)};
      return sp.center + rot2(sp.direction, local);
    }
    default:
      throw std::logic_error("reference_point on a non-curve pattern");
  }
}

// Longest prefix of the curve that stays inside the area, by 1 cm march.
// Caps at 10 m so a degenerate config cannot spin forever.
double march_path_length(const PatternSpec& sp, const Area2& area) {
  constexpr double kStep = 0.01, kCap = 10.0;
  double s = 0.0;
  while (s < kCap) {
    double nxt = s + kStep;
    if (!in_area(curve_point_unfolded(sp, nxt), area)) return s;
    s = nxt;
  }
  return kCap;
}

}  // namespace

PatternKind pattern_kind_from_string(const std::string& s) {
  for (PatternKind k :
       {PatternKind::line, PatternKind::sine, PatternKind::circle,
        PatternKind::arc, PatternKind::oval, PatternKind::random_waypoint,
        PatternKind::random_action}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown pattern '" + s + "'");
}

const char* to_string(PatternKind k) {
  switch (k) {
    case PatternKind::line: return "line";
    case PatternKind::sine: return "sine";
    case PatternKind::circle: return "circle";
    case PatternKind::arc: return "arc";
    case PatternKind::oval: return "oval";
    case PatternKind::random_waypoint: return "random_waypoint";
    case PatternKind::random_action: return "random_action";
  }
  return "?";
}

const std::vector<PatternKind>& train_pattern_kinds() {
  static const std::vector<PatternKind> v = {
      PatternKind::line, PatternKind::sine, PatternKind::circle};
  return v;
}

const std::vector<PatternKind>& test_pattern_kinds() {
  static const std::vector<PatternKind> v = {
      PatternKind::arc, PatternKind::oval, PatternKind::random_waypoint,
      PatternKind::random_action};
  return v;
}

bool is_curve(PatternKind k) {
  return k == PatternKind::line || k == PatternKind::sine ||
         k == PatternKind::circle || k == PatternKind::arc ||
         k == PatternKind::oval;
}

Vec2 reference_point(const PatternSpec& spec, double s) {
  return curve_point_unfolded(spec, fold(s, spec.path_length));
}

PatternSpec sample_pattern(PatternKind kind, Rng& rng, const Area2& area,
                           const PatternSamplerConfig& cfg, RotationMode rotation) {
  PatternSpec sp;
  sp.kind = kind;
  sp.rotation_mode = rotation;
  if (rotation == RotationMode::constant_rate) {
    sp.rotation_rate = rng.uniform(-cfg.rotation_rate_max, cfg.rotation_rate_max);
  } else {
    sp.rotation_mean = rng.uniform(-cfg.rotation_mean_max, cfg.rotation_mean_max);
    sp.rotation_std = cfg.rotation_std;
  }
  sp.runtime_seed = rng.next_u64();

  auto uniform_in_area = [&] {
    return Vec2{rng.uniform(area.x_min, area.x_max),
                rng.uniform(area.y_min, area.y_max)};
  };

  switch (kind) {
    case PatternKind::line:
    case PatternKind::sine: {
      for (int tries = 0; tries < 64; ++tries) {
        sp.start = uniform_in_area();
        sp.direction = rng.uniform(-kPi, kPi);
        if (kind == PatternKind::sine) {
          sp.amplitude = rng.uniform(cfg.sine_amp_min, cfg.sine_amp_max);
          sp.frequency = rng.uniform(cfg.sine_freq_min, cfg.sine_freq_max);
        }
        sp.path_length = march_path_length(sp, area);
        if (sp.path_length >= cfg.min_path_length) break;
      }
      break;
    }
    case PatternKind::circle:
    case PatternKind::arc: {
      double r_hi = std::min({cfg.circle_radius_max,
                              (area.x_max - area.x_min) / 2.0,
                              (area.y_max - area.y_min) / 2.0});
      sp.radius = rng.uniform(std::min(cfg.circle_radius_min, r_hi), r_hi);
      sp.center = {rng.uniform(area.x_min + sp.radius, area.x_max - sp.radius),
                   rng.uniform(area.y_min + sp.radius, area.y_max - sp.radius)};
      sp.start_angle = rng.uniform(-kPi, kPi);
      sp.orbit_dir = rng.sign();
      if (kind == PatternKind::arc) {
        sp.span = rng.uniform(cfg.arc_span_min, cfg.arc_span_max);
        sp.path_length = sp.radius * sp.span;
      }
      sp.start = curve_point_unfolded(sp, 0.0);
      break;
    }
    case PatternKind::oval: {
      double margin = 0.005;
      double half_x = (area.x_max - area.x_min) / 2.0 - margin;
      double half_y = (area.y_max - area.y_min) / 2.0 - margin;
      for (int tries = 0;; ++tries) {
        double a = rng.uniform(cfg.oval_axis_min, cfg.oval_axis_max);
        double b = rng.uniform(cfg.oval_axis_min, cfg.oval_axis_max);
        if (a < b) std::swap(a, b);
        double rot = rng.uniform(-kPi, kPi);
        if (tries >= 200) {
          a = std::min(a, std::min(half_x, half_y));
          b = std::min(b, a);
          rot = 0.0;
        }
        // tight axis-aligned bounds of the rotated ellipse
        double c = std::cos(rot), s = std::sin(rot);
        double ex = std::sqrt(a * a * c * c + b * b * s * s);
        double ey = std::sqrt(a * a * s * s + b * b * c * c);
        if (ex > half_x || ey > half_y) continue;
        sp.radius = a;
        sp.radius_b = b;
        sp.direction = rot;
        sp.center = {rng.uniform(area.x_min + ex, area.x_max - ex),
                     rng.uniform(area.y_min + ey, area.y_max - ey)};
        break;
      }
      sp.start_angle = rng.uniform(-kPi, kPi);
      sp.orbit_dir = rng.sign();
      sp.start = curve_point_unfolded(sp, 0.0);
      break;
    }
    case PatternKind::random_waypoint:
    case PatternKind::random_action: {
      sp.start = uniform_in_area();
      sp.direction = rng.uniform(-kPi, kPi);  // initial heading for the walk
      sp.heading_jitter = cfg.heading_jitter;
      break;
    }
  }
  return sp;
}

PatternPolicy::PatternPolicy(const PatternSpec& spec, const EnvConfig& env)
    : spec_(spec),
      step_len_(env.speed_ratio * env.robot_speed * env.dt),
      rng_(spec.runtime_seed),
      heading_(spec.direction) {}

MoverAction PatternPolicy::act(const WorldState& ws) {
  MoverAction out;

  // rotation command first: one draw per step in gaussian mode keeps the
  // stream aligned regardless of translation branches below
  if (spec_.rotation_mode == RotationMode::constant_rate) {
    out.yaw_rate = clampd(spec_.rotation_rate, -1.0, 1.0);
  } else {
    out.yaw_rate = clampd(rng_.normal(spec_.rotation_mean, spec_.rotation_std),
                          -1.0, 1.0);
  }

  if (step_len_ < 1e-12) return out;
  Vec2 plate = ws.plate_center;
  Vec2 target = plate;

  switch (spec_.kind) {
    case PatternKind::line:
    case PatternKind::circle:
    case PatternKind::arc: {
      s_ += step_len_;  // these parameterize by arc length directly
      target = reference_point(spec_, s_);
      break;
    }
    case PatternKind::sine: {
      // advance the abscissa so the traveled arc is one step budget
      double t = fold(s_, spec_.path_length);
      double slope = spec_.amplitude * spec_.frequency *
                     std::cos(spec_.frequency * t);
      s_ += step_len_ / std::sqrt(1.0 + slope * slope);
      target = reference_point(spec_, s_);
      break;
    }
    case PatternKind::oval: {
      double ang = spec_.start_angle + spec_.orbit_dir * s_;
      double dx = spec_.radius * std::sin(ang);
      double dy = spec_.radius_b * std::cos(ang);
      double speed = std::max(std::sqrt(dx * dx + dy * dy), 1e-9);
      s_ += step_len_ / speed;
      target = reference_point(spec_, s_);
      break;
    }
    case PatternKind::random_waypoint: {
      if (!have_waypoint_ || norm(waypoint_ - plate) <= step_len_) {
        waypoint_ = {rng_.uniform(kMoverArea.x_min, kMoverArea.x_max),
                     rng_.uniform(kMoverArea.y_min, kMoverArea.y_max)};
        have_waypoint_ = true;
      }
      target = waypoint_;
      break;
    }
    case PatternKind::random_action: {
      heading_ += rng_.uniform(-1.0, 1.0) * spec_.heading_jitter;
      Vec2 tentative = plate + step_len_ * Vec2{std::cos(heading_),
                                                std::sin(heading_)};
      // bounce off the area walls instead of grinding along them
      if (tentative.x < kMoverArea.x_min || tentative.x > kMoverArea.x_max)
        heading_ = kPi - heading_;
      if (tentative.y < kMoverArea.y_min || tentative.y > kMoverArea.y_max)
        heading_ = -heading_;
      target = plate + step_len_ * Vec2{std::cos(heading_), std::sin(heading_)};
      break;
    }
  }

  Vec2 raw = (1.0 / step_len_) * (target - plate);
  double n = norm(raw);
  if (n > 1.0) raw = (1.0 / n) * raw;
  out.x = raw.x;
  out.y = raw.y;
  return out;
}

}  // namespace advgrasp
