#include "advgrasp/baseline.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace advgrasp {

namespace {

using Mat4 = Eigen::Matrix<double, 4, 4, Eigen::RowMajor>;
using Mat42 = Eigen::Matrix<double, 4, 2>;
using Mat24 = Eigen::Matrix<double, 2, 4>;
using Vec4 = Eigen::Vector4d;

void symmetrize(Eigen::Map<Mat4> p) { p = ((p + p.transpose()) * 0.5).eval(); }

}  // namespace

FilterState filter_init(double x, double y, double process_noise,
                        double measurement_noise) {
  if (!std::isfinite(x) || !std::isfinite(y))
    throw std::invalid_argument("filter_init: non-finite position");
  if (!(process_noise > 0.0) || !(measurement_noise > 0.0))
    throw std::invalid_argument("filter_init: noise scales must be > 0");
  FilterState f;
  f.mean[0] = x;
  f.mean[1] = y;
  f.process_noise = process_noise;
  f.measurement_noise = measurement_noise;
  Eigen::Map<Mat4> p(f.cov);
  p.setZero();
  p(0, 0) = p(1, 1) = measurement_noise;
  p(2, 2) = p(3, 3) = 1.0;  // m^2/s^2; any plate speed is within one sigma
  return f;
}

void filter_predict(FilterState& f, double dt) {
  if (!std::isfinite(dt) || dt < 0.0)
    throw std::invalid_argument("filter_predict: bad dt");
  Mat4 a = Mat4::Identity();
  a(0, 2) = a(1, 3) = dt;

  // piecewise-constant acceleration noise
  double d2 = dt * dt, d3 = d2 * dt, d4 = d3 * dt;
  Mat4 q = Mat4::Zero();
  q(0, 0) = q(1, 1) = d4 / 4.0;
  q(2, 2) = q(3, 3) = d2;
  q(0, 2) = q(2, 0) = q(1, 3) = q(3, 1) = d3 / 2.0;
  q *= f.process_noise;

  Eigen::Map<Vec4> m(f.mean);
  Eigen::Map<Mat4> p(f.cov);
  m = (a * m).eval();
  p = (a * p * a.transpose() + q).eval();
  symmetrize(p);
}

void filter_update(FilterState& f, double meas_x, double meas_y) {
  if (!std::isfinite(meas_x) || !std::isfinite(meas_y))
    throw std::invalid_argument("filter_update: non-finite measurement");
  Mat24 h = Mat24::Zero();
  h(0, 0) = h(1, 1) = 1.0;
  Eigen::Matrix2d r = Eigen::Matrix2d::Identity() * f.measurement_noise;

  Eigen::Map<Vec4> m(f.mean);
  Eigen::Map<Mat4> p(f.cov);
  Eigen::Vector2d innov(meas_x - m(0), meas_y - m(1));
  Eigen::Matrix2d s = h * p * h.transpose() + r;
  Mat42 k = p * h.transpose() * s.inverse();

  m = (m + k * innov).eval();
  Mat4 ikh = Mat4::Identity() - k * h;
  p = (ikh * p * ikh.transpose() + k * r * k.transpose()).eval();
  symmetrize(p);
}

PursuitRobot::PursuitRobot(const EnvConfig& env, PursuitConfig cfg)
    : env_(env), cfg_(cfg) {}

void PursuitRobot::begin_episode(std::uint64_t) {
  filter_ready_ = false;
  phase_ = Phase::track;
  aligned_ = 0;
}

RobotAction PursuitRobot::act(const WorldState& ws) {
  const Pose& oc = ws.object.center;
  if (!filter_ready_) {
    filter_ = filter_init(oc.x, oc.y);
    filter_ready_ = true;
  } else {
    filter_predict(filter_, env_.dt);
    filter_update(filter_, oc.x, oc.y);
  }

  double rel = ws.object.hy <= ws.object.hx ? 0.0 : std::numbers::pi / 2.0;
  RobotAction a;
  a.yaw = rel;

  if (ws.attached) {
    phase_ = Phase::lift;
    a.z = kRobotActionZMax;
    a.gripper = GripperCmd::close;
    return a;
  }
  if (phase_ == Phase::lift) {
    // the grasp slipped or never latched; reopen and go back to tracking
    phase_ = Phase::track;
    aligned_ = 0;
  }

  double herr = std::hypot(ws.gripper.x - oc.x, ws.gripper.y - oc.y);
  double vx = filter_.mean[2], vy = filter_.mean[3];
  double lead =
      std::min(herr / std::max(env_.robot_speed, 1e-9), cfg_.lead_max);
  // aim at where the object will be once we get there
  Vec3 lead_world{vx * lead, vy * lead, 0.0};
  Vec3 lead_local = rotate_z(-oc.yaw, lead_world);
  auto clampd = [](double v, double m) { return std::min(std::max(v, -m), m); };
  a.x = clampd(lead_local.x, kRobotActionXYMax);
  a.y = clampd(lead_local.y, kRobotActionXYMax);

  if (phase_ == Phase::track) {
    a.z = ws.object.hz + cfg_.hover_margin;
    a.gripper = GripperCmd::open;
    if (herr < cfg_.aligned_error)
      ++aligned_;
    else
      aligned_ = 0;
    if (aligned_ >= cfg_.aligned_hold) phase_ = Phase::descend;
    return a;
  }

  // descend
  if (herr > cfg_.abort_factor * cfg_.aligned_error) {
    phase_ = Phase::track;
    aligned_ = 0;
    a.z = ws.object.hz + cfg_.hover_margin;
    a.gripper = GripperCmd::open;
    return a;
  }
  a.z = 0.0;
  Vec3 gpos{ws.gripper.x, ws.gripper.y, ws.gripper.z};
  bool can_close = contains(ws.object, gpos) &&
                   closing_extent(ws.object, ws.gripper.yaw) <=
                       env_.gripper_max_opening;
  a.gripper = can_close ? GripperCmd::close : GripperCmd::open;
  return a;
}

}  // namespace advgrasp
