#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "advgrasp/environment.hpp"
#include "advgrasp/patterns.hpp"
#include "advgrasp/policy.hpp"
#include "advgrasp/rng.hpp"

namespace advgrasp {

class RobotAgent {
 public:
  virtual ~RobotAgent() = default;
  virtual void begin_episode(std::uint64_t seed) = 0;
  virtual RobotAction act(const WorldState& ws) = 0;
};

class MoverAgent {
 public:
  virtual ~MoverAgent() = default;
  virtual void begin_episode(std::uint64_t seed) = 0;
  virtual MoverAction act(const WorldState& ws) = 0;
  // Where the plate must start when the agent tracks a fixed curve.
  virtual std::optional<Vec2> plate_start() const { return std::nullopt; }
};

// Rolls out a trained robot checkpoint, sampling from the policy with an
// episode-seeded stream.
class PolicyRobot : public RobotAgent {
 public:
  explicit PolicyRobot(PolicyParams params);
  void begin_episode(std::uint64_t seed) override;
  RobotAction act(const WorldState& ws) override;

 private:
  PolicyParams params_;
  HiddenState h_;
  Rng rng_{0};
};

// Same for a mover checkpoint.
class PolicyMover : public MoverAgent {
 public:
  explicit PolicyMover(PolicyParams params);
  void begin_episode(std::uint64_t seed) override;
  MoverAction act(const WorldState& ws) override;

 private:
  PolicyParams params_;
  HiddenState h_;
  Rng rng_{0};
};

// Drives the plate along one sampled pattern. The curve parameters are fixed
// at construction; begin_episode only rewinds the policy.
class PatternMover : public MoverAgent {
 public:
  PatternMover(const PatternSpec& spec, const EnvConfig& env);
  void begin_episode(std::uint64_t seed) override;
  MoverAction act(const WorldState& ws) override;
  std::optional<Vec2> plate_start() const override;

 private:
  PatternSpec spec_;
  EnvConfig env_;
  std::unique_ptr<PatternPolicy> policy_;
};

// Keeps the gripper parked and open. Isolates plate-side dynamics.
class IdleRobot : public RobotAgent {
 public:
  void begin_episode(std::uint64_t) override {}
  RobotAction act(const WorldState& ws) override;
};

// Hover over the object, drop through the top, close, lift. No prediction,
// so it only wins against objects that sit still or crawl.
class ScriptedGraspRobot : public RobotAgent {
 public:
  void begin_episode(std::uint64_t) override;
  RobotAction act(const WorldState& ws) override;

 private:
  bool descending_ = false;
};

struct Outcome {
  bool success = false;
  int steps = 0;
  Terminal cause = Terminal::none;
};

// One full episode. Environment, robot and mover streams are derived from
// the one seed; the plate is moved to the mover's start point when it has
// one. `trace` (optional) receives one row per state, initial state included.
Outcome run_episode(RobotAgent& robot, MoverAgent& mover, const EnvConfig& cfg,
                    std::uint64_t seed,
                    std::vector<TrajectoryRow>* trace = nullptr,
                    WorldState* final_state = nullptr);

// Gripper yaw offset that closes across the object's thinner horizontal
// axis.
double grasp_yaw_offset(const ObjectTemplate& obj);

}  // namespace advgrasp
