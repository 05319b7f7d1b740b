#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "advgrasp/environment.hpp"
#include "advgrasp/rng.hpp"

namespace advgrasp {

enum class AgentRole { robot, mover };
const char* to_string(AgentRole r);

struct HeadBounds {
  double lo = -1.0, hi = 1.0;
};

// Network shape: obs -> fc1 (tanh) -> fc2 (tanh) -> lstm -> heads. The robot
// gets 4 squashed-Gaussian heads plus a Bernoulli finger head; the mover gets
// 3 squashed-Gaussian heads. Both get a scalar value head.
struct PolicyDescriptor {
  AgentRole role = AgentRole::robot;
  int obs_dim = kObsDim;
  int fc1 = 128;
  int fc2 = 128;
  int rnn = 128;

  int gaussian_heads() const { return role == AgentRole::robot ? 4 : 3; }
  bool has_gripper_head() const { return role == AgentRole::robot; }
  std::vector<HeadBounds> bounds() const;
  std::size_t param_count() const;

  bool operator==(const PolicyDescriptor&) const = default;
};

struct PolicyParams {
  PolicyDescriptor desc;
  std::vector<double> w;  // flat block, fixed layout; size == desc.param_count()
};

struct HiddenState {
  std::vector<double> h, c;
  static HiddenState zero(const PolicyDescriptor& d);
};

struct ActionDistribution {
  std::vector<double> mean;     // pre-squash Gaussian means
  std::vector<double> log_std;  // in (-2, 0) by construction
  std::vector<HeadBounds> bounds;
  double close_logit = 0.0;
  bool has_gripper = false;
};

struct PolicyOutput {
  ActionDistribution dist;
  double value = 0.0;
  HiddenState hidden;
};

// Deterministic fan-in-scaled init. Head weights start near zero; the robot
// head biases carry behavioral priors (descend-and-close) because a fully
// centered robot explores the grasp chain too rarely to bootstrap from.
PolicyParams init_policy(const PolicyDescriptor& d, std::uint64_t seed);

PolicyOutput policy_step(const PolicyParams& p, const double* obs, int obs_len,
                         const HiddenState& h);
PolicyOutput policy_step(const PolicyParams& p, const ObsVector& obs,
                         const HiddenState& h);

struct ActionSample {
  std::vector<double> action;    // squashed, inside bounds
  std::vector<double> presquash; // Gaussian draws before tanh
  bool close = false;
  double log_prob = 0.0;
};

ActionSample sample_action(const ActionDistribution& d, Rng& rng);
// log-density of a recorded sample, squashing correction included.
double action_log_prob(const ActionDistribution& d,
                       const std::vector<double>& presquash, bool close);
// Sum of per-head entropies: closed-form pre-squash Gaussian + Bernoulli.
double entropy(const ActionDistribution& d);

RobotAction to_robot_action(const ActionSample& s);
MoverAction to_mover_action(const ActionSample& s);

// --- training support ----------------------------------------------------

struct LossSpec {
  double value_coeff = 0.5;
  double entropy_coeff = 0.01;
};

// One recorded step of an on-policy segment. presquash/close are the drawn
// sample; advantage and ret come from the return computation.
struct StepSample {
  std::vector<double> obs;
  std::vector<double> presquash;
  bool close = false;
  double advantage = 0.0;
  double ret = 0.0;
};

struct SegmentBatch {
  HiddenState h0;  // carry entering the segment; not differentiated through
  std::vector<StepSample> steps;
};

struct GradientResult {
  std::vector<double> grad;
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy_sum = 0.0;
};

// Exact reverse-mode gradient of
//   sum_t [ -A_t log pi(a_t) + value_coeff (V_t - R_t)^2 - entropy_coeff H_t ]
// over the unrolled segment.
GradientResult gradients(const PolicyParams& p, const LossSpec& ls,
                         const SegmentBatch& batch);

// --- checkpoint io --------------------------------------------------------

struct CheckpointMeta {
  std::int64_t training_step = 0;
  double gamma1 = 0.0;
};

struct Checkpoint {
  PolicyParams params;
  CheckpointMeta meta;
};

// Weights are stored as little-endian 32-bit floats after a short text
// header; saving rounds the in-memory doubles the same way, so a
// save/load/save cycle is byte-identical.
void quantize_to_f32(PolicyParams& p);
void save_checkpoint(const std::string& path, const PolicyParams& p,
                     const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace advgrasp
