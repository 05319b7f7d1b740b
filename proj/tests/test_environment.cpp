#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "advgrasp/environment.hpp"
#include "advgrasp/rng.hpp"
#include "advgrasp/runner.hpp"

using namespace advgrasp;

namespace {

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

bool same_pose(const Pose& a, const Pose& b) {
  return a.x == b.x && a.y == b.y && a.z == b.z && a.yaw == b.yaw;
}

// Gripper directly above the object at the given height offset, yaw aligned.
void hover_gripper(WorldState& ws, double dz) {
  ws.gripper = make_pose(ws.object.center.x, ws.object.center.y,
                         ws.object.center.z + dz, ws.object.center.yaw);
  ws.gripper_in_box = contains(ws.object, {ws.gripper.x, ws.gripper.y, ws.gripper.z});
  if (!ws.gripper_in_box) ws.entered_top = false;
}

struct StaticMover : MoverAgent {
  void begin_episode(std::uint64_t) override {}
  MoverAction act(const WorldState&) override { return {}; }
};

std::string validate_message(const EnvConfig& cfg) {
  try {
    validate(cfg);
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("environment") {

TEST_CASE("object catalog: six boxes, each graspable somehow") {
  const auto& cat = object_catalog();
  REQUIRE(cat.size() == 6);
  EnvConfig cfg;
  for (const auto& o : cat) {
    CHECK(o.hx > 0.0);
    CHECK(o.hy > 0.0);
    CHECK(o.hz > 0.0);
    double thin = 2.0 * std::min(o.hx, o.hy);
    CHECK(thin <= cfg.gripper_max_opening);
  }
  const auto& drill = object_by_name("power_drill");
  CHECK(2.0 * drill.hy <= cfg.gripper_max_opening);
  CHECK(2.0 * drill.hx > cfg.gripper_max_opening);  // only one way in
  CHECK_THROWS_AS(object_by_name("banana"), std::invalid_argument);
}

TEST_CASE("config validation names the bad field") {
  EnvConfig cfg;
  cfg.dt = 0.0;
  CHECK(validate_message(cfg).find("dt") != std::string::npos);
  cfg = EnvConfig{};
  cfg.speed_ratio = 0.0;
  CHECK(validate_message(cfg).find("speed_ratio") != std::string::npos);
  cfg = EnvConfig{};
  cfg.speed_ratio = 1.5;
  CHECK(validate_message(cfg).find("speed_ratio") != std::string::npos);
  cfg = EnvConfig{};
  cfg.max_steps = 0;
  CHECK(validate_message(cfg).find("max_steps") != std::string::npos);
  cfg = EnvConfig{};
  cfg.object.hz = 0.0;
  CHECK(validate_message(cfg).find("object") != std::string::npos);
  CHECK_NOTHROW(validate(EnvConfig{}));
}

TEST_CASE("reset is deterministic and well placed") {
  EnvConfig cfg;
  WorldState a = reset(cfg, 99);
  WorldState b = reset(cfg, 99);
  CHECK(same_pose(a.gripper, b.gripper));
  CHECK(same_pose(a.object.center, b.object.center));
  CHECK(a.plate_center.x == b.plate_center.x);
  CHECK(a.plate_center.y == b.plate_center.y);
  WorldState c = reset(cfg, 100);
  CHECK_FALSE(same_pose(a.gripper, c.gripper));

  Rng seeds(777);
  for (int i = 0; i < 10000; ++i) {
    WorldState ws = reset(cfg, seeds.next_u64());
    REQUIRE(ws.plate_center.x >= kMoverXMin);
    REQUIRE(ws.plate_center.x <= kMoverXMax);
    REQUIRE(ws.plate_center.y >= kMoverYMin);
    REQUIRE(ws.plate_center.y <= kMoverYMax);
    REQUIRE(ws.gripper.z == kRobotZMax);
    REQUIRE(ws.gripper.x >= kRobotXMin);
    REQUIRE(ws.gripper.x <= kRobotXMax);
    REQUIRE(ws.gripper.yaw > -std::numbers::pi);
    REQUIRE(ws.gripper.yaw <= std::numbers::pi);
    REQUIRE(ws.object.center.x == ws.plate_center.x);
    REQUIRE(ws.object.center.y == ws.plate_center.y);
    REQUIRE(near(ws.object.center.z, kPlateSurfaceZ + cfg.object.hz, 1e-12));
    REQUIRE(ws.object.center.yaw == ws.plate_yaw);
    REQUIRE(gripper_object_distance(ws.gripper, ws.object) > 0.0);
    REQUIRE(ws.terminal == Terminal::none);
    REQUIRE(ws.step_index == 0);
  }
}

TEST_CASE("a satisfied action is a fixed point of the dynamics") {
  EnvConfig cfg;
  WorldState ws = reset(cfg, 5);
  hover_gripper(ws, 0.1);
  RobotAction a1;
  a1.z = 0.1;
  StepResult r = step(cfg, ws, a1, {});
  CHECK(same_pose(r.state.gripper, ws.gripper));
  CHECK(same_pose(r.state.object.center, ws.object.center));
  CHECK(r.state.plate_center.x == ws.plate_center.x);
  CHECK(r.state.plate_center.y == ws.plate_center.y);
  CHECK(r.state.step_index == ws.step_index + 1);
  CHECK(r.state.terminal == Terminal::none);
  CHECK_FALSE(r.events.collided);
  CHECK_FALSE(r.events.inside_bbox);
  CHECK(near(r.events.d12, 0.1 - cfg.object.hz, 1e-12));
}

TEST_CASE("gripper motion is rate limited to speed * dt") {
  EnvConfig cfg;
  WorldState ws = reset(cfg, 6);
  hover_gripper(ws, 0.25);
  RobotAction a1;
  a1.z = 0.15;  // target 0.10 m straight below
  StepResult r = step(cfg, ws, a1, {});
  double moved = ws.gripper.z - r.state.gripper.z;
  CHECK(near(moved, cfg.robot_speed * cfg.dt, 1e-12));
  CHECK(r.state.gripper.x == ws.gripper.x);
  CHECK(r.state.gripper.y == ws.gripper.y);
}

TEST_CASE("plate motion scales with the speed ratio") {
  EnvConfig cfg;  // ratio 0.5
  WorldState ws = reset(cfg, 7);
  ws.plate_center = {0.4, 0.0};
  place_plate(ws, cfg, ws.plate_center);
  hover_gripper(ws, 0.2);
  RobotAction hold;
  hold.z = 0.2;

  MoverAction a2;
  a2.x = 1.0;
  StepResult r = step(cfg, ws, hold, a2);
  CHECK(near(r.state.plate_center.x - 0.4, 0.0075, 1e-12));
  CHECK(near(r.state.plate_center.y, 0.0, 1e-12));
  CHECK(near(r.state.object.center.x - 0.4, 0.0075, 1e-12));

  // oversized commands are scaled back to the unit disc
  MoverAction diag;
  diag.x = 3.0;
  diag.y = 3.0;
  r = step(cfg, ws, hold, diag);
  double dx = r.state.plate_center.x - 0.4;
  double dy = r.state.plate_center.y - 0.0;
  CHECK(near(std::hypot(dx, dy), 0.0075, 1e-12));

  MoverAction spin;
  spin.yaw_rate = 1.0;
  r = step(cfg, ws, hold, spin);
  // ratio-scaled yaw budget: 1 * 0.5 * 0.75 rad/s * 0.1 s
  CHECK(near(normalize_angle(r.state.plate_yaw - ws.plate_yaw), 0.0375, 1e-12));

  MoverAction overspin;
  overspin.yaw_rate = 4.0;
  StepResult r2 = step(cfg, ws, hold, overspin);
  CHECK(near(r2.state.plate_yaw, r.state.plate_yaw, 1e-12));
}

TEST_CASE("descend through the top, close, attach, lift, succeed") {
  EnvConfig cfg;
  cfg.object = {"slab", 0.06, 0.03, 0.04};
  WorldState ws = reset(cfg, 8);
  hover_gripper(ws, 0.2);
  RobotAction descend;  // straight down, fingers open
  int guard = 0;
  while (!ws.gripper_in_box) {
    StepResult r = step(cfg, ws, descend, {});
    REQUIRE_FALSE(r.events.collided);  // top entries never collide
    ws = r.state;
    REQUIRE(++guard < 40);
  }
  CHECK(ws.entered_top);
  CHECK_FALSE(ws.attached);

  RobotAction close = descend;
  close.gripper = GripperCmd::close;
  StepResult r = step(cfg, ws, close, {});
  CHECK(r.state.attached);
  ws = r.state;

  RobotAction lift;
  lift.z = 0.3;
  lift.gripper = GripperCmd::close;
  guard = 0;
  while (ws.terminal == Terminal::none) {
    StepResult s = step(cfg, ws, lift, {});
    ws = s.state;
    if (ws.terminal != Terminal::none) {
      CHECK(s.events.grasped_now);
    } else {
      CHECK(ws.object.center.z > kPlateSurfaceZ + cfg.object.hz - 1e-12);
    }
    REQUIRE(++guard < 40);
  }
  CHECK(ws.terminal == Terminal::grasped);
  CHECK(ws.object.center.z >= ws.initial_object_z + cfg.lift_threshold - 1e-12);
}

TEST_CASE("an object wider than the opening cannot be pinched") {
  EnvConfig cfg;
  cfg.object = {"wide", 0.06, 0.06, 0.04};  // extent 0.12 both ways
  WorldState ws = reset(cfg, 9);
  hover_gripper(ws, 0.2);
  RobotAction descend;
  int guard = 0;
  while (!ws.gripper_in_box) {
    ws = step(cfg, ws, descend, {}).state;
    REQUIRE(++guard < 40);
  }
  RobotAction close = descend;
  close.gripper = GripperCmd::close;
  StepResult r = step(cfg, ws, close, {});
  CHECK_FALSE(r.state.attached);
  CHECK(r.state.terminal == Terminal::none);
}

TEST_CASE("closing extent follows the approach yaw") {
  Obb b{make_pose(0, 0, 0, 0), 0.06, 0.03, 0.04};
  CHECK(near(closing_extent(b, 0.0), 0.06, 1e-12));
  CHECK(near(closing_extent(b, std::numbers::pi / 2), 0.12, 1e-12));
  CHECK(near(closing_extent(b, std::numbers::pi), 0.06, 1e-12));
  // rotating the box with the gripper changes nothing
  Obb rb{make_pose(0, 0, 0, 0.7), 0.06, 0.03, 0.04};
  CHECK(near(closing_extent(rb, 0.7), 0.06, 1e-12));
}

TEST_CASE("lateral approach collides and shoves the object off the plate") {
  EnvConfig cfg;
  WorldState ws = reset(cfg, 10);
  ws.plate_center = {0.4, 0.0};
  ws.plate_yaw = 0.0;
  ws.object_yaw_offset = 0.0;
  place_plate(ws, cfg, ws.plate_center);
  ws.object.center.yaw = 0.0;
  ws.gripper = make_pose(0.3, 0.0, 0.06, 0.0);
  ws.gripper_in_box = false;
  ws.entered_top = false;

  RobotAction ram;  // drive at the object at a fixed in-slab height
  ram.z = 0.06 - ws.object.center.z;
  bool collided_once = false;
  int guard = 0;
  while (ws.terminal == Terminal::none) {
    StepResult r = step(cfg, ws, ram, {});
    collided_once = collided_once || r.events.collided;
    if (r.state.terminal == Terminal::none) {
      REQUIRE(norm(r.state.object_offset) <= cfg.plate_radius + 1e-12);
      REQUIRE_FALSE(r.state.gripper_in_box);
    }
    ws = r.state;
    REQUIRE(++guard < 60);
  }
  CHECK(collided_once);
  CHECK(ws.terminal == Terminal::out_of_plate);
  CHECK(norm(ws.object_offset) > cfg.plate_radius);
}

TEST_CASE("stepping a finished episode is a logic error") {
  EnvConfig cfg;
  cfg.max_steps = 3;
  WorldState ws = reset(cfg, 11);
  hover_gripper(ws, 0.2);
  RobotAction hold;
  hold.z = 0.2;
  for (int i = 0; i < 3; ++i) ws = step(cfg, ws, hold, {}).state;
  CHECK(ws.terminal == Terminal::timeout);
  CHECK_THROWS_AS(step(cfg, ws, hold, {}), std::logic_error);
}

TEST_CASE("random stepping never violates the state envelope") {
  EnvConfig cfg;
  Rng rng(20260817);
  const auto& cat = object_catalog();
  long long steps_done = 0;
  WorldState ws;
  double mover_budget = 0.0;
  auto fresh = [&]() {
    cfg.object = cat[rng.uniform_int(cat.size())];
    cfg.speed_ratio = rng.uniform(0.05, 1.0);
    mover_budget = cfg.speed_ratio * cfg.robot_speed * cfg.dt;
    ws = reset(cfg, rng.next_u64());
  };
  fresh();
  while (steps_done < 100000) {
    RobotAction a1;
    a1.x = rng.uniform(-0.45, 0.45);  // beyond bounds on purpose
    a1.y = rng.uniform(-0.45, 0.45);
    a1.z = rng.uniform(-0.1, 0.4);
    a1.yaw = rng.uniform(-2.5, 2.5);
    a1.gripper = rng.bernoulli(0.3) ? GripperCmd::close : GripperCmd::open;
    MoverAction a2;
    a2.x = rng.uniform(-1.5, 1.5);
    a2.y = rng.uniform(-1.5, 1.5);
    a2.yaw_rate = rng.uniform(-1.5, 1.5);

    Vec3 g_prev{ws.gripper.x, ws.gripper.y, ws.gripper.z};
    Vec2 p_prev = ws.plate_center;
    StepResult r = step(cfg, ws, a1, a2);
    ++steps_done;
    const WorldState& ns = r.state;
    const StepEvents& ev = r.events;

    REQUIRE(ns.gripper.x >= kRobotXMin);
    REQUIRE(ns.gripper.x <= kRobotXMax);
    REQUIRE(ns.gripper.y >= kRobotYMin);
    REQUIRE(ns.gripper.y <= kRobotYMax);
    REQUIRE(ns.gripper.z >= kRobotZMin);
    REQUIRE(ns.gripper.z <= kRobotZMax);
    REQUIRE(ns.plate_center.x >= kMoverXMin);
    REQUIRE(ns.plate_center.x <= kMoverXMax);
    REQUIRE(ns.plate_center.y >= kMoverYMin);
    REQUIRE(ns.plate_center.y <= kMoverYMax);

    Vec3 g_now{ns.gripper.x, ns.gripper.y, ns.gripper.z};
    REQUIRE(norm(g_now - g_prev) <= cfg.robot_speed * cfg.dt + 1e-12);
    REQUIRE(norm(ns.plate_center - p_prev) <= mover_budget + 1e-12);

    if (ns.terminal != Terminal::out_of_plate)
      REQUIRE(norm(ns.object_offset) <= cfg.plate_radius + 1e-12);

    int causes = int(ev.grasped_now) + int(ev.out_of_plate) + int(ev.timeout);
    if (ns.terminal == Terminal::none) {
      REQUIRE(causes == 0);
    } else {
      REQUIRE(causes == 1);
      REQUIRE((ns.terminal != Terminal::grasped) == !ev.grasped_now);
      REQUIRE((ns.terminal != Terminal::out_of_plate) == !ev.out_of_plate);
      REQUIRE((ns.terminal != Terminal::timeout) == !ev.timeout);
    }
    REQUIRE(ns.step_index <= cfg.max_steps);
    REQUIRE(ns.step_index == ws.step_index + 1);
    REQUIRE(std::isfinite(ev.d12));
    REQUIRE(ev.d12 >= 0.0);

    ws = ns;
    if (ws.terminal != Terminal::none) fresh();
  }
}

TEST_CASE("the scripted routine lifts a stationary object") {
  EnvConfig cfg;
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    ScriptedGraspRobot robot;
    StaticMover mover;
    Outcome out = run_episode(robot, mover, cfg, seed);
    REQUIRE(out.success);
    REQUIRE(out.cause == Terminal::grasped);
  }
}

TEST_CASE("observations use the right frames") {
  EnvConfig cfg;
  WorldState ws = reset(cfg, 15);
  ObsVector ro = robot_observation(ws);
  // lead block is the gripper pose in the base (= world) frame
  CHECK(near(ro[0], ws.gripper.x, 1e-12));
  CHECK(near(ro[1], ws.gripper.y, 1e-12));
  CHECK(near(ro[2], ws.gripper.z, 1e-12));
  CHECK(near(ro[3], ws.gripper.yaw, 1e-12));

  ObsVector mo = mover_observation(ws);
  // gripper expressed in the object frame: rebuild it by hand
  Pose rel = relative_to(ws.object.center, ws.gripper);
  CHECK(near(mo[0], rel.x, 1e-12));
  CHECK(near(mo[1], rel.y, 1e-12));
  CHECK(near(mo[2], rel.z, 1e-12));
  CHECK(near(mo[3], rel.yaw, 1e-12));
  // keypoints in the object's own frame are the local corners: x of corner 0
  CHECK(near(mo[4], -ws.object.hx, 1e-12));
  CHECK(near(mo[4 + 3 * 8], 0.0, 1e-12));  // center keypoint
}

TEST_CASE("trajectory serialization carries the documented header") {
  std::vector<TrajectoryRow> rows(2);
  rows[0].step = 0;
  rows[1].step = 1;
  rows[1].events.d12 = 0.25;
  std::ostringstream os;
  write_trajectory(os, rows);
  std::string text = os.str();
  std::string header = text.substr(0, text.find('\n'));
  CHECK(header ==
        "step,g_x,g_y,g_z,g_yaw,o_x,o_y,o_z,o_yaw,plate_x,plate_y,"
        "inside_bbox,collided,grasped,out_of_plate,timeout,d12");
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

}  // TEST_SUITE
