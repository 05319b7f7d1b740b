#include "advgrasp/runner.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace advgrasp {

double grasp_yaw_offset(const ObjectTemplate& obj) {
  return obj.hy <= obj.hx ? 0.0 : std::numbers::pi / 2.0;
}

PolicyRobot::PolicyRobot(PolicyParams params)
    : params_(std::move(params)), h_(HiddenState::zero(params_.desc)) {
  if (params_.desc.role != AgentRole::robot)
    throw std::invalid_argument("PolicyRobot needs robot-role parameters");
}

void PolicyRobot::begin_episode(std::uint64_t seed) {
  h_ = HiddenState::zero(params_.desc);
  rng_ = Rng(seed);
}

RobotAction PolicyRobot::act(const WorldState& ws) {
  PolicyOutput out = policy_step(params_, robot_observation(ws), h_);
  h_ = std::move(out.hidden);
  return to_robot_action(sample_action(out.dist, rng_));
}

PolicyMover::PolicyMover(PolicyParams params)
    : params_(std::move(params)), h_(HiddenState::zero(params_.desc)) {
  if (params_.desc.role != AgentRole::mover)
    throw std::invalid_argument("PolicyMover needs mover-role parameters");
}

void PolicyMover::begin_episode(std::uint64_t seed) {
  h_ = HiddenState::zero(params_.desc);
  rng_ = Rng(seed);
}

MoverAction PolicyMover::act(const WorldState& ws) {
  PolicyOutput out = policy_step(params_, mover_observation(ws), h_);
  h_ = std::move(out.hidden);
  return to_mover_action(sample_action(out.dist, rng_));
}

PatternMover::PatternMover(const PatternSpec& spec, const EnvConfig& env)
    : spec_(spec), env_(env),
      policy_(std::make_unique<PatternPolicy>(spec_, env_)) {}

void PatternMover::begin_episode(std::uint64_t) {
  policy_ = std::make_unique<PatternPolicy>(spec_, env_);
}

MoverAction PatternMover::act(const WorldState& ws) {
  return policy_->act(ws);
}

std::optional<Vec2> PatternMover::plate_start() const { return spec_.start; }

RobotAction IdleRobot::act(const WorldState& ws) {
  Vec3 local = point_in_frame(ws.object.center,
                              {ws.gripper.x, ws.gripper.y, ws.gripper.z});
  RobotAction a;
  a.x = local.x;
  a.y = local.y;
  a.z = local.z;
  a.yaw = normalize_angle(ws.gripper.yaw - ws.object.center.yaw);
  a.gripper = GripperCmd::open;
  return a;
}

void ScriptedGraspRobot::begin_episode(std::uint64_t) { descending_ = false; }

RobotAction ScriptedGraspRobot::act(const WorldState& ws) {
  double rel = ws.object.hy <= ws.object.hx ? 0.0 : std::numbers::pi / 2.0;
  RobotAction a;
  a.yaw = rel;

  if (ws.attached) {
    a.z = kRobotActionZMax;
    a.gripper = GripperCmd::close;
    return a;
  }

  Vec3 gpos{ws.gripper.x, ws.gripper.y, ws.gripper.z};
  if (contains(ws.object, gpos) &&
      closing_extent(ws.object, ws.gripper.yaw) <= 0.08) {
    a.z = 0.0;
    a.gripper = GripperCmd::close;
    return a;
  }

  double herr = std::hypot(ws.gripper.x - ws.object.center.x,
                           ws.gripper.y - ws.object.center.y);
  double yerr = std::fabs(normalize_angle(
      ws.gripper.yaw - normalize_angle(ws.object.center.yaw + rel)));
  if (!descending_) {
    if (herr > 0.002 || yerr > 0.02) {
      a.z = ws.object.hz + 0.03;  // park above the top face first
      a.gripper = GripperCmd::open;
      return a;
    }
    descending_ = true;
  }
  a.z = 0.0;  // straight down through the top
  a.gripper = GripperCmd::open;
  return a;
}

Outcome run_episode(RobotAgent& robot, MoverAgent& mover, const EnvConfig& cfg,
                    std::uint64_t seed, std::vector<TrajectoryRow>* trace,
                    WorldState* final_state) {
  WorldState ws = reset(cfg, derive_seed(seed, "env"));
  robot.begin_episode(derive_seed(seed, "robot"));
  mover.begin_episode(derive_seed(seed, "mover"));
  if (auto start = mover.plate_start()) place_plate(ws, cfg, *start);

  if (trace) {
    StepEvents ev;
    ev.d12 = gripper_object_distance(ws.gripper, ws.object);
    ev.inside_bbox =
        contains(ws.object, {ws.gripper.x, ws.gripper.y, ws.gripper.z});
    trace->push_back({0, ws.gripper, ws.object.center, ws.plate_center, ev});
  }
  while (ws.terminal == Terminal::none) {
    RobotAction a1 = robot.act(ws);
    MoverAction a2 = mover.act(ws);
    StepResult res = step(cfg, ws, a1, a2);
    ws = res.state;
    if (trace)
      trace->push_back({ws.step_index, ws.gripper, ws.object.center,
                        ws.plate_center, res.events});
  }
  if (final_state) *final_state = ws;
  return {ws.terminal == Terminal::grasped, ws.step_index, ws.terminal};
}

}  // namespace advgrasp
