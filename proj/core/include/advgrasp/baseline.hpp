#pragma once

#include <cstdint>

#include "advgrasp/environment.hpp"
#include "advgrasp/runner.hpp"

namespace advgrasp {

// Constant-velocity planar Kalman filter over the object center. State is
// [x, y, vx, vy]; covariance is row-major 4x4.
struct FilterState {
  double mean[4] = {0.0, 0.0, 0.0, 0.0};
  double cov[16] = {0.0};
  double process_noise = 1.0;       // acceleration spectral density
  double measurement_noise = 1e-6;  // position variance per axis
};

FilterState filter_init(double x, double y, double process_noise = 1.0,
                        double measurement_noise = 1e-6);
void filter_predict(FilterState& f, double dt);
// Joseph-form update, so the covariance stays symmetric positive definite.
// Throws std::invalid_argument on a non-finite measurement.
void filter_update(FilterState& f, double meas_x, double meas_y);

struct PursuitConfig {
  double hover_margin = 0.05;   // height kept above the object top on approach
  double aligned_error = 0.01;  // horizontal error that counts as aligned
  int aligned_hold = 3;         // consecutive aligned steps before dropping
  double abort_factor = 3.0;    // error growth that sends the drop back up
  double lead_max = 1.0;        // max velocity lead, seconds
};

// Model-based chaser: hover over the filter's velocity-led position, drop
// once the track has settled, close inside the box, lift. The standard
// non-learned opponent for the evaluation grid.
class PursuitRobot : public RobotAgent {
 public:
  explicit PursuitRobot(const EnvConfig& env, PursuitConfig cfg = {});
  void begin_episode(std::uint64_t seed) override;
  RobotAction act(const WorldState& ws) override;

 private:
  enum class Phase { track, descend, lift };

  EnvConfig env_;
  PursuitConfig cfg_;
  FilterState filter_;
  bool filter_ready_ = false;
  Phase phase_ = Phase::track;
  int aligned_ = 0;
};

}  // namespace advgrasp
