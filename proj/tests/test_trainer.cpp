#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "advgrasp/runner.hpp"
#include "advgrasp/trainer.hpp"

using namespace advgrasp;

namespace {

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

TrainConfig tiny_train(long long total) {
  TrainConfig tc;
  tc.total_steps = total;
  tc.finetune_steps = 100;
  tc.n_step = 20;
  tc.workers = 1;
  tc.pool_snapshot_every = 60;
  tc.select_every = 0;
  tc.log_every = 2;
  tc.sr_window = 10;
  return tc;
}

EnvSuite small_suite() {
  EnvSuite suite;
  suite.objects = {object_by_name("rubiks_cube")};
  return suite;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("discount curriculum: linear ramp, capped at 92000 updates") {
  TrainConfig tc;
  CHECK(gamma_schedule(0, tc) == 0.5);
  CHECK(gamma_schedule(91999, tc) < 0.96);
  CHECK(gamma_schedule(92000, tc) == 0.96);
  CHECK(gamma_schedule(10000000, tc) == 0.96);
  double prev = -1.0;
  for (long long u = 0; u <= 200000; u += 1000) {
    double g = gamma_schedule(u, tc);
    REQUIRE(g >= prev);
    REQUIRE(g <= 0.96);
    prev = g;
  }
  CHECK(near(gamma_schedule(50000, tc), 0.75, 1e-12));
}

TEST_CASE("n-step returns recurse from the bootstrap") {
  ReturnsResult rr =
      returns_and_advantages({0.0, 10.0}, {0.0, 0.0}, 0.5, 0.0);
  REQUIRE(rr.returns.size() == 2);
  CHECK(rr.returns[0] == 5.0);
  CHECK(rr.returns[1] == 10.0);
  CHECK(rr.advantages[0] == 5.0);

  ReturnsResult zero_g =
      returns_and_advantages({1.0, 2.0, 3.0}, {0.0, 0.0, 0.0}, 0.0, 9.0);
  CHECK(zero_g.returns == std::vector<double>{1.0, 2.0, 3.0});

  // bootstrap feeds the tail
  ReturnsResult boot = returns_and_advantages({1.0}, {0.0}, 0.9, 10.0);
  CHECK(near(boot.returns[0], 10.0, 1e-12));

  // a perfect critic leaves nothing to move on
  std::vector<double> r{0.3, -0.1, 2.0};
  ReturnsResult ref = returns_and_advantages(r, {0, 0, 0}, 0.8, 0.5);
  ReturnsResult met = returns_and_advantages(r, ref.returns, 0.8, 0.5);
  for (double a : met.advantages) REQUIRE(a == 0.0);

  CHECK_THROWS_AS(returns_and_advantages({}, {}, 0.9, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(returns_and_advantages({1.0}, {1.0, 2.0}, 0.9, 0.0),
                  std::invalid_argument);
}

TEST_CASE("global-norm clip reports the pre-clip norm") {
  std::vector<double> v{80.0};
  CHECK(clip_global_norm(v, 40.0) == 80.0);
  CHECK(v[0] == 40.0);

  std::vector<double> w{3.0, 4.0};
  CHECK(clip_global_norm(w, 40.0) == 5.0);
  CHECK(w[0] == 3.0);  // under the cap, untouched
  CHECK(w[1] == 4.0);

  std::vector<double> u{30.0, 40.0};  // norm 50
  CHECK(clip_global_norm(u, 40.0) == 50.0);
  CHECK(near(std::hypot(u[0], u[1]), 40.0, 1e-12));
}

TEST_CASE("an already-satisfied batch leaves the parameters alone") {
  PolicyDescriptor d;
  d.role = AgentRole::mover;
  d.obs_dim = 4;
  d.fc1 = 5;
  d.fc2 = 4;
  d.rnn = 3;
  PolicyParams p = init_policy(d, 17);
  Rng rng(18);
  SegmentBatch batch;
  batch.h0 = HiddenState::zero(d);
  HiddenState h = batch.h0;
  for (int t = 0; t < 6; ++t) {
    StepSample s;
    s.obs.assign(4, rng.uniform(-1.0, 1.0));
    s.presquash = {0.1, 0.2, -0.3};
    s.advantage = 0.0;
    PolicyOutput out = policy_step(p, s.obs.data(), 4, h);
    s.ret = out.value;
    h = out.hidden;
    batch.steps.push_back(std::move(s));
  }
  TrainConfig tc;
  tc.entropy_coeff = 0.0;
  std::vector<double> before = p.w;
  UpdateReport rep = a2c_update(p, {batch}, tc.lr, tc);
  CHECK(rep.applied);
  CHECK(rep.grad_norm == 0.0);
  REQUIRE(p.w == before);
}

TEST_CASE("one descent step lowers the loss on a fixed batch") {
  PolicyDescriptor d;
  d.obs_dim = 5;
  d.fc1 = 6;
  d.fc2 = 5;
  d.rnn = 4;
  PolicyParams p = init_policy(d, 19);
  Rng rng(20);
  SegmentBatch batch;
  batch.h0 = HiddenState::zero(d);
  for (int t = 0; t < 5; ++t) {
    StepSample s;
    s.obs.assign(5, rng.uniform(-1.0, 1.0));
    s.presquash.assign(4, rng.uniform(-0.5, 0.5));
    s.close = rng.bernoulli(0.5);
    s.advantage = rng.uniform(-1.0, 1.0);
    s.ret = rng.uniform(-1.0, 1.0);
    batch.steps.push_back(std::move(s));
  }
  TrainConfig tc;
  LossSpec ls{tc.value_coeff, tc.entropy_coeff};
  double before = gradients(p, ls, batch).loss;
  UpdateReport rep = a2c_update(p, {batch}, tc.lr, tc);
  REQUIRE(rep.applied);
  double after = gradients(p, ls, batch).loss;
  CHECK(after < before);
}

TEST_CASE("a poisoned parameter block is refused, not applied") {
  PolicyDescriptor d;
  d.obs_dim = 4;
  d.fc1 = 4;
  d.fc2 = 4;
  d.rnn = 3;
  PolicyParams p = init_policy(d, 23);
  p.w[0] = std::numeric_limits<double>::quiet_NaN();
  SegmentBatch batch;
  batch.h0 = HiddenState::zero(d);
  StepSample s;
  s.obs.assign(4, 0.1);
  s.presquash.assign(4, 0.0);
  s.advantage = 1.0;
  batch.steps.push_back(s);
  TrainConfig tc;
  UpdateReport rep = a2c_update(p, {batch}, tc.lr, tc);
  CHECK_FALSE(rep.applied);
}

TEST_CASE("train config validation names the field") {
  TrainConfig tc;
  tc.gamma2 = 1.0;
  CHECK_THROWS_WITH_AS(validate(tc), doctest::Contains("gamma2"),
                       std::invalid_argument);
  tc = TrainConfig{};
  tc.train_ratio_min = 0.6;
  tc.train_ratio_max = 0.5;
  CHECK_THROWS_AS(validate(tc), std::invalid_argument);
  tc = TrainConfig{};
  tc.stack_max = 0;
  CHECK_THROWS_WITH_AS(validate(tc), doctest::Contains("stack_max"),
                       std::invalid_argument);
  CHECK_NOTHROW(validate(TrainConfig{}));
}

TEST_CASE("training log serialization") {
  TrainLogRow r;
  r.update = 25;
  r.env_steps = 500;
  r.gamma1 = 0.5;
  r.mean_r1 = -0.25;
  r.mean_r2 = 0.125;
  r.rolling_sr = 0.5;
  r.rolling_len = 300.0;
  std::ostringstream os;
  write_train_log(os, {r});
  CHECK(os.str() ==
        "update,env_steps,gamma1,mean_r1,mean_r2,rolling_sr,rolling_len\n"
        "25,500,0.5,-0.25,0.125,0.5,300\n");
}

TEST_CASE("uniform_int spreads evenly enough to mix a pool") {
  Rng rng(2024);
  int counts[10] = {};
  for (int i = 0; i < 10000; ++i) ++counts[rng.uniform_int(10)];
  for (int c : counts) {
    REQUIRE(c >= 800);
    REQUIRE(c <= 1200);
  }
}

TEST_CASE("tiny adversarial run: pool cadence and log bookkeeping") {
  TrainConfig tc = tiny_train(200);
  EnvSuite suite = small_suite();
  TrainResult res = adversarial_train(tc, suite, 42);

  // snapshots at every 60-step crossing plus the final one
  REQUIRE(res.pool.entries.size() == 4);
  CHECK(res.pool.entries[0].env_step == 60);
  CHECK(res.pool.entries[1].env_step == 120);
  CHECK(res.pool.entries[2].env_step == 180);
  CHECK(res.pool.entries[3].env_step == 200);
  // snapshots are quantized copies of the evolving mover
  for (const auto& e : res.pool.entries) {
    PolicyParams q = e.params;
    quantize_to_f32(q);
    REQUIRE(q.w == e.params.w);
  }

  // 10 updates, a row every 2 -> 5 rows; gamma logged before the increment
  REQUIRE(res.log.size() == 5);
  for (std::size_t i = 0; i < res.log.size(); ++i) {
    const TrainLogRow& row = res.log[i];
    CHECK(row.update == (long long)(2 * (i + 1)));
    CHECK(row.env_steps == row.update * 20);
    CHECK(row.gamma1 == gamma_schedule(row.update - 1, tc));
    CHECK(row.rolling_sr >= 0.0);
    CHECK(row.rolling_sr <= 1.0);
  }

  // no selection configured: the final robot is the reported robot
  CHECK(res.robot.w == res.robot_final.w);
  CHECK(res.best_step == 200);
}

TEST_CASE("two identical seeds produce bit-identical training runs") {
  TrainConfig tc = tiny_train(200);
  EnvSuite suite = small_suite();
  TrainResult a = adversarial_train(tc, suite, 7);
  TrainResult b = adversarial_train(tc, suite, 7);
  REQUIRE(a.robot_final.w == b.robot_final.w);
  REQUIRE(a.mover_final.w == b.mover_final.w);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].mean_r1 == b.log[i].mean_r1);
    CHECK(a.log[i].mean_r2 == b.log[i].mean_r2);
    CHECK(a.log[i].rolling_sr == b.log[i].rolling_sr);
  }
  TrainResult c = adversarial_train(tc, suite, 8);
  CHECK(a.robot_final.w != c.robot_final.w);
}

TEST_CASE("scripted phase: no pool, mover never trained") {
  TrainConfig tc = tiny_train(200);
  tc.adversarial = false;
  EnvSuite suite = small_suite();
  TrainResult res = adversarial_train(tc, suite, 42);
  CHECK(res.pool.entries.empty());
  PolicyParams fresh =
      init_policy(PolicyDescriptor{AgentRole::mover}, derive_seed(42, "init", 1));
  REQUIRE(res.mover_final.w == fresh.w);
  // the robot still trained
  PolicyParams fresh_r =
      init_policy(PolicyDescriptor{AgentRole::robot}, derive_seed(42, "init", 0));
  REQUIRE(res.robot_final.w != fresh_r.w);
}

TEST_CASE("selection keeps the best scripted-suite scorer") {
  TrainConfig tc = tiny_train(200);
  tc.select_every = 100;
  tc.select_episodes = 3;
  EnvSuite suite = small_suite();
  suite.base.max_steps = 40;  // keep the selection rollouts short
  TrainResult res = adversarial_train(tc, suite, 11);
  CHECK(res.best_sr >= 0.0);
  CHECK(res.best_sr <= 1.0);
  CHECK((res.best_step == 100 || res.best_step == 200));
  CHECK(res.robot.w.size() == res.robot_final.w.size());
}

TEST_CASE("held mover with k=1 is the plain policy mover") {
  PolicyParams mp = init_policy(PolicyDescriptor{AgentRole::mover}, 99);
  EnvConfig cfg;
  WorldState ws = reset(cfg, 123);

  HeldPolicyMover held(mp, 1, 555);
  PolicyMover plain(mp);
  plain.begin_episode(555);
  for (int t = 0; t < 30; ++t) {
    MoverAction a = held.act(ws);
    MoverAction b = plain.act(ws);
    REQUIRE(a.x == b.x);
    REQUIRE(a.y == b.y);
    REQUIRE(a.yaw_rate == b.yaw_rate);
    RobotAction hover;
    hover.z = 0.3;
    ws = step(cfg, ws, hover, a).state;
  }
}

TEST_CASE("held mover repeats each decision k times") {
  PolicyParams mp = init_policy(PolicyDescriptor{AgentRole::mover}, 98);
  EnvConfig cfg;
  WorldState ws = reset(cfg, 321);
  HeldPolicyMover held(mp, 3, 556);
  std::vector<MoverAction> acts;
  RobotAction hover;
  hover.z = 0.3;
  for (int t = 0; t < 12; ++t) {
    acts.push_back(held.act(ws));
    ws = step(cfg, ws, hover, acts.back()).state;
  }
  for (int base = 0; base < 12; base += 3) {
    CHECK(acts[base + 1].x == acts[base].x);
    CHECK(acts[base + 1].y == acts[base].y);
    CHECK(acts[base + 2].x == acts[base].x);
  }
  // fresh draws across block boundaries (states differ, stream advanced)
  CHECK(acts[3].x != acts[0].x);
  CHECK_THROWS_AS(HeldPolicyMover(mp, 0, 1), std::invalid_argument);
}

TEST_CASE("the pool round-trips through its on-disk form") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "advgrasp_test_pool";
  fs::remove_all(dir);

  PolicyDescriptor md{AgentRole::mover};
  ModelPool pool;
  for (int i = 0; i < 3; ++i) {
    ModelPoolEntry e;
    e.env_step = (i + 1) * 1000;
    e.params = init_policy(md, std::uint64_t(i));
    quantize_to_f32(e.params);
    pool.entries.push_back(std::move(e));
  }
  pool.save(dir.string());
  ModelPool loaded = ModelPool::load(dir.string());
  REQUIRE(loaded.entries.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(loaded.entries[i].env_step == pool.entries[i].env_step);
    REQUIRE(loaded.entries[i].params.w == pool.entries[i].params.w);
  }

  // a reloaded snapshot drives the held mover bit-identically
  EnvConfig cfg;
  WorldState ws = reset(cfg, 77);
  HeldPolicyMover m1(pool.entries[0].params, 2, 5);
  HeldPolicyMover m2(loaded.entries[0].params, 2, 5);
  for (int t = 0; t < 10; ++t) {
    MoverAction a = m1.act(ws);
    MoverAction b = m2.act(ws);
    REQUIRE(a.x == b.x);
    REQUIRE(a.y == b.y);
    REQUIRE(a.yaw_rate == b.yaw_rate);
  }
  fs::remove_all(dir);
  CHECK_THROWS_AS(ModelPool::load((dir / "missing").string()),
                  std::runtime_error);
}

TEST_CASE("finetune runs against a pool of one and keeps counting gamma") {
  TrainConfig tc = tiny_train(200);
  EnvSuite suite = small_suite();
  PolicyParams robot =
      init_policy(PolicyDescriptor{AgentRole::robot}, derive_seed(3, "init", 0));
  ModelPool pool;
  ModelPoolEntry e;
  e.env_step = 200;
  e.params = init_policy(PolicyDescriptor{AgentRole::mover}, 12);
  quantize_to_f32(e.params);
  pool.entries.push_back(std::move(e));

  std::vector<TrainLogRow> rows;
  PolicyParams tuned = finetune(robot, pool, tc, suite, 3,
                                [&rows](const TrainLogRow& r) { rows.push_back(r); });
  REQUIRE(tuned.w.size() == robot.w.size());
  CHECK(tuned.w != robot.w);

  // offset = total_steps / (workers * n_step) = 10; row gamma uses offset + u - 1
  REQUIRE(rows.size() == 2);  // 100 steps -> 5 updates -> rows at 2 and 4
  CHECK(rows[0].update == 2);
  CHECK(rows[0].gamma1 == gamma_schedule(10 + 1, tc));
  CHECK(rows[1].gamma1 == gamma_schedule(10 + 3, tc));

  ModelPool empty;
  CHECK_THROWS_AS(finetune(robot, empty, tc, suite, 3), std::invalid_argument);
}

TEST_CASE("reward ablations change what the learners are paid") {
  // geometry off: the robot sees pure distance, the mover its negation
  RewardConfig rc;
  StepEvents ev;
  ev.d12 = 0.3;
  ev.collided = true;
  TrainConfig tc;
  tc.geometry_reward = false;
  // mirror of the trainer's wiring
  StepEvents masked = ev;
  if (!tc.collision_check) masked.collided = false;
  double r1 = tc.geometry_reward ? robot_reward(masked, rc)
                                 : vanilla_robot_reward(masked, rc);
  double r2 = tc.geometry_reward ? mover_reward(ev, rc)
                                 : zero_sum_mover_reward(masked, rc);
  CHECK(r1 == -0.3);
  CHECK(r2 == 0.3);
  CHECK(r1 + r2 == 0.0);

  // collision masking: the geometry reward loses exactly the collision term
  TrainConfig tg;
  tg.collision_check = false;
  StepEvents m2 = ev;
  if (!tg.collision_check) m2.collided = false;
  CHECK(near(robot_reward(ev, rc) - robot_reward(m2, rc),
             rc.collision_penalty, 1e-12));
}

TEST_CASE("ablation switches leave fingerprints in the trained nets") {
  TrainConfig tc = tiny_train(100);
  EnvSuite suite = small_suite();
  TrainResult geo = adversarial_train(tc, suite, 5);
  TrainConfig tv = tc;
  tv.geometry_reward = false;
  TrainResult vanilla = adversarial_train(tv, suite, 5);
  // same seeds, same episodes, different payments -> different nets
  CHECK(geo.robot_final.w != vanilla.robot_final.w);
  CHECK(geo.mover_final.w != vanilla.mover_final.w);
}

}  // TEST_SUITE
