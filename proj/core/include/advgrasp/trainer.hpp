#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "advgrasp/environment.hpp"
#include "advgrasp/patterns.hpp"
#include "advgrasp/policy.hpp"
#include "advgrasp/rewards.hpp"

namespace advgrasp {

struct TrainConfig {
  double lr = 0.001;           // both agents, main phase
  double finetune_lr = 0.0001; // robot during finetuning
  double gamma1_init = 0.5;    // robot discount schedule
  double gamma1_final = 0.96;
  double gamma1_coeff = 5e-6;  // per update step
  double gamma2 = 0.9;         // mover discount; no published value, exposed here
  int n_step = 20;
  double entropy_coeff = 0.01;
  double value_coeff = 0.5;
  double grad_clip = 40.0;     // global norm
  int workers = 1;
  long long pool_snapshot_every = 20000;  // env steps between mover snapshots
  long long total_steps = 200000;         // env steps, main phase
  long long finetune_steps = 50000;       // env steps, finetune phase
  bool adversarial = true;      // off: scripted line/sine/circle movers
  bool geometry_reward = true;  // off: plain-distance robot reward, zero-sum mover
  bool collision_check = true;  // off: collisions carry no reward penalty
  double train_ratio_min = 0.1, train_ratio_max = 1.0;  // per-episode speed ratio
  double stack_prob = 0.5;  // finetune: chance an episode holds mover io
  int stack_max = 4;        // hold factor drawn from {1..stack_max}
  long long select_every = 50000;  // env steps between selection evals; 0 = off
  int select_episodes = 12;        // episodes per selection eval
  int log_every = 25;              // updates per training-log row
  int sr_window = 100;             // rolling episode window for SR / length
};

// Throws std::invalid_argument naming the field.
void validate(const TrainConfig& cfg);

// min(final, init + coeff * update_step); monotone, capped.
double gamma_schedule(long long update_step, const TrainConfig& cfg);

// R_t = r_t + gamma R_{t+1}, seeded with the bootstrap value past the last
// step (0 when the segment ended the episode); A_t = R_t - V_t.
struct ReturnsResult {
  std::vector<double> returns, advantages;
};
ReturnsResult returns_and_advantages(const std::vector<double>& rewards,
                                     const std::vector<double>& values,
                                     double gamma, double bootstrap_value);

// Scales v in place so its l2 norm is at most max_norm; returns the norm
// before scaling.
double clip_global_norm(std::vector<double>& v, double max_norm);

struct UpdateReport {
  double loss = 0.0, policy_loss = 0.0, value_loss = 0.0, entropy = 0.0;
  double grad_norm = 0.0;  // pre-clip global norm
  bool applied = false;    // false when the loss or gradient went non-finite
};

// One synchronous update: summed gradients over the batches (in batch order),
// clipped by global norm, plain gradient descent at lr.
UpdateReport a2c_update(PolicyParams& params,
                        const std::vector<SegmentBatch>& batches, double lr,
                        const TrainConfig& cfg);

struct ModelPoolEntry {
  long long env_step = 0;
  PolicyParams params;  // f32-quantized at snapshot time
};

struct ModelPool {
  std::vector<ModelPoolEntry> entries;
  // One checkpoint per snapshot plus an index file, under dir.
  void save(const std::string& dir) const;
  static ModelPool load(const std::string& dir);
};

struct TrainLogRow {
  long long update = 0;
  long long env_steps = 0;
  double gamma1 = 0.0;
  double mean_r1 = 0.0, mean_r2 = 0.0;  // per-step means since the last row
  double rolling_sr = 0.0;
  double rolling_len = 0.0;
};

extern const char* kTrainLogHeader;
void write_train_log(std::ostream& os, const std::vector<TrainLogRow>& rows);

// Environment family used across training: base config plus the object set
// episodes draw from (round-robin) and the pattern sampler settings for
// scripted phases.
struct EnvSuite {
  EnvConfig base;
  std::vector<ObjectTemplate> objects = object_catalog();
  PatternSamplerConfig patterns;
  RewardConfig rewards;
};

struct TrainResult {
  PolicyParams robot;        // selection winner when selection ran, else final
  PolicyParams robot_final;
  PolicyParams mover_final;
  ModelPool pool;
  std::vector<TrainLogRow> log;
  double best_sr = -1.0;           // selection SR of `robot`
  long long best_step = -1;
};

// Main phase: robot and mover trained simultaneously from shared episodes
// (or robot vs scripted patterns when cfg.adversarial is off). Throws
// std::runtime_error naming the env step if an update goes non-finite.
TrainResult adversarial_train(
    const TrainConfig& cfg, const EnvSuite& suite, std::uint64_t seed,
    const std::function<void(const TrainLogRow&)>& on_log = nullptr);

// Robot-only phase against opponents drawn uniformly from the pool, with
// per-episode observation/action hold randomization.
PolicyParams finetune(
    const PolicyParams& robot, const ModelPool& pool, const TrainConfig& cfg,
    const EnvSuite& suite, std::uint64_t seed,
    const std::function<void(const TrainLogRow&)>& on_log = nullptr);

// Frozen mover policy with periodic refresh: recomputes observation and
// action every hold_k steps and repeats the action in between. hold_k = 1 is
// plain per-step acting.
class HeldPolicyMover {
 public:
  HeldPolicyMover(const PolicyParams& params, int hold_k, std::uint64_t seed);
  MoverAction act(const WorldState& ws);

 private:
  const PolicyParams* params_;
  int k_;
  long long tick_ = 0;
  Rng rng_;
  HiddenState h_;
  MoverAction held_;
};

}  // namespace advgrasp
