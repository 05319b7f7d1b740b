#include "advgrasp/rewards.hpp"

#include <stdexcept>

namespace advgrasp {

void validate(const RewardConfig& rc) {
  auto fail = [](const char* what) {
    throw std::invalid_argument(std::string("reward config: ") + what);
  };
  if (!(rc.success_reward > 0.0)) fail("success_reward must be positive");
  if (!(rc.out_of_plate_penalty <= 0.0)) fail("out_of_plate_penalty must be <= 0");
  if (!(rc.bbox_bonus >= 0.0)) fail("bbox_bonus must be >= 0");
  if (!(rc.collision_penalty <= 0.0)) fail("collision_penalty must be <= 0");
  if (!(rc.time_penalty <= 0.0)) fail("time_penalty must be <= 0");
  if (!(rc.safe_distance > 0.0)) fail("safe_distance must be positive");
  if (rc.proximity_penalty != -rc.safe_distance)
    fail("proximity_penalty must equal -safe_distance");
}

double robot_reward(const StepEvents& ev, const RewardConfig& rc) {
  if (ev.grasped_now) return rc.success_reward;
  if (ev.out_of_plate) return rc.out_of_plate_penalty;
  double r = ev.inside_bbox ? rc.bbox_bonus : -ev.d12;
  if (ev.collided) r += rc.collision_penalty;
  return r + rc.time_penalty;
}

double vanilla_robot_reward(const StepEvents& ev, const RewardConfig& rc) {
  if (ev.grasped_now) return rc.success_reward;
  if (ev.out_of_plate) return rc.out_of_plate_penalty;
  return -ev.d12;
}

double mover_reward(const StepEvents& ev, const RewardConfig& rc) {
  double r = ev.d12;
  if (ev.d12 < rc.safe_distance) r += rc.proximity_penalty;
  return r;
}

double zero_sum_mover_reward(const StepEvents& ev, const RewardConfig& rc) {
  return -vanilla_robot_reward(ev, rc);
}

}  // namespace advgrasp
