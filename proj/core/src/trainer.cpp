#include "advgrasp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace advgrasp {

void validate(const TrainConfig& cfg) {
  auto fail = [](const char* what) {
    throw std::invalid_argument(std::string("train config: ") + what);
  };
  if (!(cfg.lr > 0.0)) fail("lr must be > 0");
  if (!(cfg.finetune_lr > 0.0)) fail("finetune_lr must be > 0");
  if (!(cfg.gamma1_init > 0.0 && cfg.gamma1_init < 1.0)) fail("gamma1_init must be in (0, 1)");
  if (!(cfg.gamma1_final > 0.0 && cfg.gamma1_final < 1.0)) fail("gamma1_final must be in (0, 1)");
  if (!(cfg.gamma1_coeff >= 0.0)) fail("gamma1_coeff must be >= 0");
  if (!(cfg.gamma2 > 0.0 && cfg.gamma2 < 1.0)) fail("gamma2 must be in (0, 1)");
  if (cfg.n_step <= 0) fail("n_step must be > 0");
  if (!(cfg.entropy_coeff >= 0.0)) fail("entropy_coeff must be >= 0");
  if (!(cfg.value_coeff >= 0.0)) fail("value_coeff must be >= 0");
  if (!(cfg.grad_clip > 0.0)) fail("grad_clip must be > 0");
  if (cfg.workers <= 0) fail("workers must be > 0");
  if (cfg.pool_snapshot_every <= 0) fail("pool_snapshot_every must be > 0");
  if (cfg.total_steps <= 0) fail("total_steps must be > 0");
  if (cfg.finetune_steps <= 0) fail("finetune_steps must be > 0");
  if (!(cfg.train_ratio_min > 0.0 && cfg.train_ratio_min <= cfg.train_ratio_max &&
        cfg.train_ratio_max <= 1.0))
    fail("train ratio range must satisfy 0 < min <= max <= 1");
  if (!(cfg.stack_prob >= 0.0 && cfg.stack_prob <= 1.0)) fail("stack_prob must be in [0, 1]");
  if (cfg.stack_max <= 0) fail("stack_max must be > 0");
  if (cfg.select_every < 0) fail("select_every must be >= 0");
  if (cfg.select_episodes <= 0) fail("select_episodes must be > 0");
  if (cfg.log_every <= 0) fail("log_every must be > 0");
  if (cfg.sr_window <= 0) fail("sr_window must be > 0");
}

double gamma_schedule(long long update_step, const TrainConfig& cfg) {
  return std::min(cfg.gamma1_final,
                  cfg.gamma1_init + cfg.gamma1_coeff * double(update_step));
}

ReturnsResult returns_and_advantages(const std::vector<double>& rewards,
                                     const std::vector<double>& values,
                                     double gamma, double bootstrap_value) {
  if (rewards.empty()) throw std::invalid_argument("returns: empty segment");
  if (rewards.size() != values.size())
    throw std::invalid_argument("returns: reward/value length mismatch");
  std::size_t n = rewards.size();
  ReturnsResult out;
  out.returns.resize(n);
  out.advantages.resize(n);
  double acc = bootstrap_value;
  for (std::size_t i = n; i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    out.returns[i] = acc;
    out.advantages[i] = acc - values[i];
  }
  return out;
}

double clip_global_norm(std::vector<double>& v, double max_norm) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    double s = max_norm / norm;
    for (double& x : v) x *= s;
  }
  return norm;
}

UpdateReport a2c_update(PolicyParams& params,
                        const std::vector<SegmentBatch>& batches, double lr,
                        const TrainConfig& cfg) {
  UpdateReport rep;
  LossSpec ls{cfg.value_coeff, cfg.entropy_coeff};
  std::vector<double> grad(params.w.size(), 0.0);
  for (const auto& b : batches) {
    GradientResult g = gradients(params, ls, b);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g.grad[i];
    rep.loss += g.loss;
    rep.policy_loss += g.policy_loss;
    rep.value_loss += g.value_loss;
    rep.entropy += g.entropy_sum;
  }
  if (!std::isfinite(rep.loss)) return rep;
  rep.grad_norm = clip_global_norm(grad, cfg.grad_clip);
  if (!std::isfinite(rep.grad_norm)) return rep;
  for (std::size_t i = 0; i < grad.size(); ++i) params.w[i] -= lr * grad[i];
  rep.applied = true;
  return rep;
}

const char* kTrainLogHeader =
    "update,env_steps,gamma1,mean_r1,mean_r2,rolling_sr,rolling_len";

void write_train_log(std::ostream& os, const std::vector<TrainLogRow>& rows) {
  os << kTrainLogHeader << '\n';
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%lld,%.17g,%.17g,%.17g,%.17g,%.17g",
                  r.update, r.env_steps, r.gamma1, r.mean_r1, r.mean_r2,
                  r.rolling_sr, r.rolling_len);
    os << buf << '\n';
  }
}

void ModelPool::save(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream idx(fs::path(dir) / "index.txt");
  if (!idx) throw std::runtime_error("cannot write pool index under '" + dir + "'");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "snap_%04zu.ckpt", i);
    CheckpointMeta meta;
    meta.training_step = entries[i].env_step;
    save_checkpoint((fs::path(dir) / name).string(), entries[i].params, meta);
    idx << i << ',' << entries[i].env_step << ',' << name << '\n';
  }
}

ModelPool ModelPool::load(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream idx(fs::path(dir) / "index.txt");
  if (!idx) throw std::runtime_error("cannot read pool index under '" + dir + "'");
  ModelPool pool;
  std::string line;
  while (std::getline(idx, line)) {
    if (line.empty()) continue;
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::runtime_error("malformed pool index line '" + line + "'");
    ModelPoolEntry e;
    e.env_step = std::stoll(line.substr(c1 + 1, c2 - c1 - 1));
    e.params = load_checkpoint((fs::path(dir) / line.substr(c2 + 1)).string()).params;
    pool.entries.push_back(std::move(e));
  }
  return pool;
}

HeldPolicyMover::HeldPolicyMover(const PolicyParams& params, int hold_k,
                                 std::uint64_t seed)
    : params_(&params), k_(hold_k), rng_(seed),
      h_(HiddenState::zero(params.desc)) {
  if (hold_k <= 0) throw std::invalid_argument("hold_k must be > 0");
}

MoverAction HeldPolicyMover::act(const WorldState& ws) {
  if (tick_ % k_ == 0) {
    PolicyOutput out = policy_step(*params_, mover_observation(ws), h_);
    h_ = out.hidden;
    held_ = to_mover_action(sample_action(out.dist, rng_));
  }
  ++tick_;
  return held_;
}

namespace {

// Raw per-agent recording of one contiguous run of steps; converted into a
// SegmentBatch once the discount for the pending update is known.
struct RawSeg {
  HiddenState h0;
  std::vector<StepSample> steps;   // advantage/ret filled at update time
  std::vector<double> rewards, values;
  double bootstrap = 0.0;
};

SegmentBatch finish(RawSeg&& seg, double gamma) {
  ReturnsResult rr = returns_and_advantages(seg.rewards, seg.values, gamma,
                                            seg.bootstrap);
  SegmentBatch b;
  b.h0 = std::move(seg.h0);
  b.steps = std::move(seg.steps);
  for (std::size_t i = 0; i < b.steps.size(); ++i) {
    b.steps[i].ret = rr.returns[i];
    b.steps[i].advantage = rr.advantages[i];
  }
  return b;
}

struct EpisodeStat {
  bool success = false;
  int length = 0;
};

struct Worker {
  int id = 0;
  std::uint64_t run_seed = 0;
  EnvConfig cfg;
  WorldState ws;
  HiddenState h1, h2;
  Rng act1{0}, act2{0};
  std::unique_ptr<PatternPolicy> scripted;
  std::unique_ptr<HeldPolicyMover> pool_mover;
  long long episode_index = -1;
  bool episode_live = false;

  RawSeg seg1, seg2;
  // per-round outputs
  std::vector<RawSeg> done1, done2;
  std::vector<EpisodeStat> stats;
  double r1_sum = 0.0, r2_sum = 0.0;
  long steps_done = 0;
};

enum class MoverSource { learned, scripted, pool };

struct Phase {
  const TrainConfig* tc;
  const EnvSuite* suite;
  MoverSource mover_source;
  const ModelPool* pool = nullptr;  // pool mode
};

void start_episode(Worker& w, const Phase& ph, const PolicyDescriptor& rd,
                   const PolicyDescriptor& md) {
  ++w.episode_index;
  std::uint64_t es = derive_seed(w.run_seed, "episode", std::uint64_t(w.id),
                                 std::uint64_t(w.episode_index));
  Rng ep(es);
  w.cfg = ph.suite->base;
  const auto& objs = ph.suite->objects;
  w.cfg.object = objs[std::size_t(w.episode_index) % objs.size()];
  w.cfg.speed_ratio =
      ep.uniform(ph.tc->train_ratio_min, ph.tc->train_ratio_max);
  w.ws = reset(w.cfg, ep.next_u64());

  if (ph.mover_source == MoverSource::scripted) {
    const auto& kinds = train_pattern_kinds();
    PatternKind kind = kinds[ep.uniform_int(kinds.size())];
    PatternSpec spec = sample_pattern(kind, ep, kMoverArea, ph.suite->patterns,
                                      RotationMode::constant_rate);
    place_plate(w.ws, w.cfg, spec.start);
    w.scripted = std::make_unique<PatternPolicy>(spec, w.cfg);
  } else if (ph.mover_source == MoverSource::pool) {
    const auto& entries = ph.pool->entries;
    const auto& pick = entries[ep.uniform_int(entries.size())];
    int k = 1;
    if (ep.bernoulli(ph.tc->stack_prob))
      k = 1 + int(ep.uniform_int(std::uint64_t(ph.tc->stack_max)));
    w.pool_mover = std::make_unique<HeldPolicyMover>(pick.params, k, ep.next_u64());
  }

  w.act1 = Rng(ep.next_u64());
  w.act2 = Rng(ep.next_u64());
  w.h1 = HiddenState::zero(rd);
  w.h2 = HiddenState::zero(md);
  w.seg1 = RawSeg{w.h1, {}, {}, {}, 0.0};
  w.seg2 = RawSeg{w.h2, {}, {}, {}, 0.0};
  w.episode_live = true;
}

// Runs exactly n_step env steps under frozen parameters, splitting segments
// at episode boundaries. Open segments are bootstrapped with the current
// value estimate at the round edge.
void run_round(Worker& w, const Phase& ph, const PolicyParams& robot,
               const PolicyParams* mover, bool record_mover) {
  const TrainConfig& tc = *ph.tc;
  w.done1.clear();
  w.done2.clear();
  w.stats.clear();
  w.r1_sum = 0.0;
  w.r2_sum = 0.0;
  w.steps_done = 0;

  for (int i = 0; i < tc.n_step; ++i) {
    if (!w.episode_live)
      start_episode(w, ph, robot.desc,
                    mover ? mover->desc : PolicyDescriptor{AgentRole::mover});

    ObsVector obs1 = robot_observation(w.ws);
    PolicyOutput out1 = policy_step(robot, obs1, w.h1);
    ActionSample s1 = sample_action(out1.dist, w.act1);

    MoverAction a2;
    ActionSample s2;
    PolicyOutput out2;
    ObsVector obs2{};
    if (ph.mover_source == MoverSource::learned) {
      obs2 = mover_observation(w.ws);
      out2 = policy_step(*mover, obs2, w.h2);
      s2 = sample_action(out2.dist, w.act2);
      a2 = to_mover_action(s2);
    } else if (ph.mover_source == MoverSource::scripted) {
      a2 = w.scripted->act(w.ws);
    } else {
      a2 = w.pool_mover->act(w.ws);
    }

    StepResult res = step(w.cfg, w.ws, to_robot_action(s1), a2);

    StepEvents ev_reward = res.events;
    if (!tc.collision_check) ev_reward.collided = false;
    double r1 = tc.geometry_reward ? robot_reward(ev_reward, ph.suite->rewards)
                                   : vanilla_robot_reward(ev_reward, ph.suite->rewards);
    double r2 = tc.geometry_reward
                    ? mover_reward(res.events, ph.suite->rewards)
                    : zero_sum_mover_reward(ev_reward, ph.suite->rewards);

    w.seg1.steps.push_back(
        {std::vector<double>(obs1.begin(), obs1.end()), s1.presquash, s1.close,
         0.0, 0.0});
    w.seg1.rewards.push_back(r1);
    w.seg1.values.push_back(out1.value);
    w.h1 = std::move(out1.hidden);
    if (record_mover) {
      w.seg2.steps.push_back(
          {std::vector<double>(obs2.begin(), obs2.end()), s2.presquash,
           s2.close, 0.0, 0.0});
      w.seg2.rewards.push_back(r2);
      w.seg2.values.push_back(out2.value);
    }
    if (ph.mover_source == MoverSource::learned) w.h2 = std::move(out2.hidden);

    w.r1_sum += r1;
    w.r2_sum += r2;
    ++w.steps_done;
    w.ws = res.state;

    if (w.ws.terminal != Terminal::none) {
      w.stats.push_back(
          {w.ws.terminal == Terminal::grasped, w.ws.step_index});
      w.seg1.bootstrap = 0.0;
      w.done1.push_back(std::move(w.seg1));
      w.seg1 = RawSeg{};
      if (record_mover) {
        w.seg2.bootstrap = 0.0;
        w.done2.push_back(std::move(w.seg2));
        w.seg2 = RawSeg{};
      }
      w.episode_live = false;
    }
  }

  if (w.episode_live && !w.seg1.steps.empty()) {
    w.seg1.bootstrap = policy_step(robot, robot_observation(w.ws), w.h1).value;
    w.done1.push_back(std::move(w.seg1));
    w.seg1 = RawSeg{w.h1, {}, {}, {}, 0.0};
    if (record_mover) {
      w.seg2.bootstrap =
          policy_step(*mover, mover_observation(w.ws), w.h2).value;
      w.done2.push_back(std::move(w.seg2));
      w.seg2 = RawSeg{w.h2, {}, {}, {}, 0.0};
    }
  }
}

// Fixed scripted-pattern suite measuring robot SR; used to pick the snapshot
// that goes on to finetuning.
double selection_sr(const PolicyParams& robot, const EnvSuite& suite,
                    const TrainConfig& tc, std::uint64_t seed) {
  int successes = 0;
  const auto& kinds = train_pattern_kinds();
  for (int e = 0; e < tc.select_episodes; ++e) {
    Rng er(derive_seed(seed, "select", std::uint64_t(e)));
    EnvConfig cfg = suite.base;
    cfg.object = suite.objects[std::size_t(e) % suite.objects.size()];
    cfg.speed_ratio = er.uniform(tc.train_ratio_min, tc.train_ratio_max);
    WorldState ws = reset(cfg, er.next_u64());
    PatternSpec spec = sample_pattern(kinds[std::size_t(e) % kinds.size()], er,
                                      kMoverArea, suite.patterns,
                                      RotationMode::constant_rate);
    place_plate(ws, cfg, spec.start);
    PatternPolicy pat(spec, cfg);
    Rng arng(er.next_u64());
    HiddenState h = HiddenState::zero(robot.desc);
    while (ws.terminal == Terminal::none) {
      PolicyOutput out = policy_step(robot, robot_observation(ws), h);
      h = std::move(out.hidden);
      ActionSample s = sample_action(out.dist, arng);
      ws = step(cfg, ws, to_robot_action(s), pat.act(ws)).state;
    }
    if (ws.terminal == Terminal::grasped) ++successes;
  }
  return double(successes) / double(tc.select_episodes);
}

struct LogAccum {
  std::deque<EpisodeStat> window;
  double r1_sum = 0.0, r2_sum = 0.0;
  long steps = 0;

  void absorb(const Worker& w, int sr_window) {
    r1_sum += w.r1_sum;
    r2_sum += w.r2_sum;
    steps += w.steps_done;
    for (const auto& s : w.stats) {
      window.push_back(s);
      while (int(window.size()) > sr_window) window.pop_front();
    }
  }

  TrainLogRow row(long long update, long long env_steps, double gamma1) {
    TrainLogRow r;
    r.update = update;
    r.env_steps = env_steps;
    r.gamma1 = gamma1;
    r.mean_r1 = steps ? r1_sum / double(steps) : 0.0;
    r.mean_r2 = steps ? r2_sum / double(steps) : 0.0;
    int succ = 0;
    double len = 0.0;
    for (const auto& s : window) {
      succ += s.success ? 1 : 0;
      len += s.length;
    }
    r.rolling_sr = window.empty() ? 0.0 : double(succ) / double(window.size());
    r.rolling_len = window.empty() ? 0.0 : len / double(window.size());
    r1_sum = r2_sum = 0.0;
    steps = 0;
    return r;
  }
};

void run_workers(std::vector<Worker>& workers, const Phase& ph,
                 const PolicyParams& robot, const PolicyParams* mover,
                 bool record_mover) {
  if (workers.size() == 1) {
    run_round(workers[0], ph, robot, mover, record_mover);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers.size());
  for (auto& w : workers)
    threads.emplace_back([&w, &ph, &robot, mover, record_mover] {
      run_round(w, ph, robot, mover, record_mover);
    });
  for (auto& t : threads) t.join();
}

}  // namespace

TrainResult adversarial_train(
    const TrainConfig& cfg, const EnvSuite& suite, std::uint64_t seed,
    const std::function<void(const TrainLogRow&)>& on_log) {
  validate(cfg);
  validate(suite.base);
  validate(suite.rewards);
  if (suite.objects.empty())
    throw std::invalid_argument("train: object set must not be empty");

  PolicyDescriptor rd{AgentRole::robot};
  PolicyDescriptor md{AgentRole::mover};
  TrainResult out;
  out.robot_final = init_policy(rd, derive_seed(seed, "init", 0));
  out.mover_final = init_policy(md, derive_seed(seed, "init", 1));

  Phase ph{&cfg, &suite,
           cfg.adversarial ? MoverSource::learned : MoverSource::scripted,
           nullptr};

  std::vector<Worker> workers(std::size_t(cfg.workers));
  for (int i = 0; i < cfg.workers; ++i) {
    workers[std::size_t(i)].id = i;
    workers[std::size_t(i)].run_seed = seed;
  }

  LogAccum acc;
  long long env_steps = 0, update = 0;
  long long next_pool_at = cfg.pool_snapshot_every;
  long long next_select_at = cfg.select_every > 0 ? cfg.select_every : -1;

  auto snapshot_mover = [&](long long at_step) {
    ModelPoolEntry e;
    e.env_step = at_step;
    e.params = out.mover_final;
    quantize_to_f32(e.params);
    out.pool.entries.push_back(std::move(e));
  };
  auto consider_selection = [&](long long at_step) {
    double sr = selection_sr(out.robot_final, suite, cfg,
                             derive_seed(seed, "selection"));
    if (sr >= out.best_sr) {
      out.best_sr = sr;
      out.best_step = at_step;
      out.robot = out.robot_final;
    }
  };

  while (env_steps < cfg.total_steps) {
    run_workers(workers, ph, out.robot_final,
                cfg.adversarial ? &out.mover_final : nullptr, cfg.adversarial);
    env_steps += (long long)cfg.workers * cfg.n_step;

    double g1 = gamma_schedule(update, cfg);
    std::vector<SegmentBatch> b1, b2;
    for (auto& w : workers) {
      for (auto& s : w.done1) b1.push_back(finish(std::move(s), g1));
      for (auto& s : w.done2) b2.push_back(finish(std::move(s), cfg.gamma2));
      acc.absorb(w, cfg.sr_window);
    }

    UpdateReport rep1 = a2c_update(out.robot_final, b1, cfg.lr, cfg);
    if (!rep1.applied)
      throw std::runtime_error("non-finite robot update at env step " +
                               std::to_string(env_steps));
    if (cfg.adversarial) {
      UpdateReport rep2 = a2c_update(out.mover_final, b2, cfg.lr, cfg);
      if (!rep2.applied)
        throw std::runtime_error("non-finite mover update at env step " +
                                 std::to_string(env_steps));
    }
    ++update;

    if (update % cfg.log_every == 0) {
      TrainLogRow row = acc.row(update, env_steps, g1);
      out.log.push_back(row);
      if (on_log) on_log(row);
    }
    if (cfg.adversarial) {
      while (env_steps >= next_pool_at) {
        snapshot_mover(env_steps);
        next_pool_at += cfg.pool_snapshot_every;
      }
    }
    if (next_select_at > 0 && env_steps >= next_select_at) {
      consider_selection(env_steps);
      next_select_at += cfg.select_every;
    }
  }

  if (cfg.adversarial) snapshot_mover(env_steps);  // final snapshot
  if (cfg.select_every > 0) {
    consider_selection(env_steps);
  } else {
    out.robot = out.robot_final;
    out.best_step = env_steps;
  }
  return out;
}

PolicyParams finetune(
    const PolicyParams& robot, const ModelPool& pool, const TrainConfig& cfg,
    const EnvSuite& suite, std::uint64_t seed,
    const std::function<void(const TrainLogRow&)>& on_log) {
  validate(cfg);
  validate(suite.base);
  validate(suite.rewards);
  if (pool.entries.empty())
    throw std::invalid_argument("finetune: model pool is empty");

  PolicyParams params = robot;
  Phase ph{&cfg, &suite, MoverSource::pool, &pool};

  std::vector<Worker> workers(std::size_t(cfg.workers));
  for (int i = 0; i < cfg.workers; ++i) {
    workers[std::size_t(i)].id = i;
    workers[std::size_t(i)].run_seed = derive_seed(seed, "finetune");
  }

  // the discount curriculum keeps counting from where the main phase stopped
  long long update_offset =
      cfg.total_steps / ((long long)cfg.workers * cfg.n_step);

  LogAccum acc;
  long long env_steps = 0, update = 0;
  while (env_steps < cfg.finetune_steps) {
    run_workers(workers, ph, params, nullptr, false);
    env_steps += (long long)cfg.workers * cfg.n_step;

    double g1 = gamma_schedule(update_offset + update, cfg);
    std::vector<SegmentBatch> b1;
    for (auto& w : workers) {
      for (auto& s : w.done1) b1.push_back(finish(std::move(s), g1));
      acc.absorb(w, cfg.sr_window);
    }
    UpdateReport rep = a2c_update(params, b1, cfg.finetune_lr, cfg);
    if (!rep.applied)
      throw std::runtime_error("non-finite finetune update at env step " +
                               std::to_string(env_steps));
    ++update;
    if (update % cfg.log_every == 0) {
      TrainLogRow row = acc.row(update, env_steps, g1);
      if (on_log) on_log(row);
    }
  }
  return params;
}

}  // namespace advgrasp
