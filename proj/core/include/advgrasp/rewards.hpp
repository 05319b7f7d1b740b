#pragma once

#include "advgrasp/environment.hpp"

namespace advgrasp {

struct RewardConfig {
  double success_reward = 10.0;         // terminal grasp
  double out_of_plate_penalty = -0.1;   // terminal escape
  double bbox_bonus = 0.1;              // gripper inside the object box
  double collision_penalty = -0.1;
  double time_penalty = -0.005;         // every non-terminal robot step
  double safe_distance = 0.2;           // m; mover wants the gripper beyond it
  double proximity_penalty = -0.2;      // mover penalty inside safe_distance
};

// Throws std::invalid_argument naming the field. proximity_penalty is pinned
// to -safe_distance so the mover's step reward stays non-positive exactly
// when the gripper crosses the safety boundary.
void validate(const RewardConfig& rc);

// Shaped robot reward: terminal payouts on grasp and escape, otherwise
// distance shaping that switches to a flat bonus once the gripper is inside
// the box, plus collision and time penalties. Timeout steps score like any
// other non-terminal shaping step.
double robot_reward(const StepEvents& ev, const RewardConfig& rc);

// Distance-only variant: terminal payouts plus plain -d12 shaping, no box
// bonus, no collision or time terms.
double vanilla_robot_reward(const StepEvents& ev, const RewardConfig& rc);

// Escape reward: keep the gripper far, penalized when it comes closer than
// safe_distance.
double mover_reward(const StepEvents& ev, const RewardConfig& rc);

// Strictly adversarial variant: negated vanilla robot reward.
double zero_sum_mover_reward(const StepEvents& ev, const RewardConfig& rc);

}  // namespace advgrasp
