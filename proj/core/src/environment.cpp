#include "advgrasp/environment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "advgrasp/rng.hpp"

namespace advgrasp {

const std::vector<ObjectTemplate>& object_catalog() {
  static const std::vector<ObjectTemplate> catalog = {
      {"potted_meat_can", 0.050, 0.0285, 0.0415},
      {"rubiks_cube", 0.0285, 0.0285, 0.0285},
      {"tomato_soup_can", 0.033, 0.033, 0.050},
      {"sugar_box", 0.045, 0.022, 0.0875},
      {"mustard_bottle", 0.048, 0.029, 0.095},
      {"power_drill", 0.092, 0.030, 0.060},
  };
  return catalog;
}

const ObjectTemplate& object_by_name(const std::string& name) {
  for (const auto& o : object_catalog())
    if (o.name == name) return o;
  throw std::invalid_argument("unknown object '" + name + "'");
}

void validate(const EnvConfig& cfg) {
  auto fail = [](const char* what) {
    throw std::invalid_argument(std::string("env config: ") + what);
  };
  if (!(cfg.dt > 0.0)) fail("dt must be > 0");
  if (!(cfg.robot_speed > 0.0)) fail("robot_speed must be > 0");
  if (!(cfg.robot_yaw_rate > 0.0)) fail("robot_yaw_rate must be > 0");
  if (!(cfg.speed_ratio > 0.0 && cfg.speed_ratio <= 1.0))
    fail("speed_ratio must be in (0, 1]");
  if (!(cfg.plate_radius > 0.0)) fail("plate_radius must be > 0");
  if (!(cfg.lift_threshold > 0.0)) fail("lift_threshold must be > 0");
  if (cfg.max_steps <= 0) fail("max_steps must be > 0");
  if (!(cfg.gripper_max_opening > 0.0)) fail("gripper_max_opening must be > 0");
  if (!(cfg.object.hx > 0.0 && cfg.object.hy > 0.0 && cfg.object.hz > 0.0))
    fail("object half extents must be > 0");
}

const char* to_string(Terminal t) {
  switch (t) {
    case Terminal::none: return "none";
    case Terminal::grasped: return "grasped";
    case Terminal::out_of_plate: return "out_of_plate";
    case Terminal::timeout: return "timeout";
  }
  return "?";
}

namespace {

double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

Vec2 clamp_area(Vec2 p, const Area2& a) {
  return {clampd(p.x, a.x_min, a.x_max), clampd(p.y, a.y_min, a.y_max)};
}

double rest_z(const WorldState& ws) { return kPlateSurfaceZ + ws.object.hz; }

Vec3 gripper_point(const WorldState& ws) {
  return {ws.gripper.x, ws.gripper.y, ws.gripper.z};
}

// Entry classification in box-local coordinates so a box sliding onto a
// stationary gripper is handled by the same slab walk as a moving gripper.
EntryHit classify_entry_local(double hx, double hy, double hz, Vec3 a, Vec3 b) {
  const double half[3] = {hx, hy, hz};
  const double from[3] = {a.x, a.y, a.z};
  const double delta[3] = {b.x - a.x, b.y - a.y, b.z - a.z};

  double t_enter = -1.0, t_exit = 1.0;
  int enter_axis = -1;
  double enter_sign = 0.0;
  // z first so a lateral face wins an exact corner tie
  for (int k : {2, 0, 1}) {
    if (delta[k] == 0.0) {
      if (std::abs(from[k]) > half[k]) return {};  // parallel and outside the slab
      continue;
    }
    double t0 = (-half[k] - from[k]) / delta[k];
    double t1 = (half[k] - from[k]) / delta[k];
    double face_sign = -1.0;  // crossing the -half face first
    if (t0 > t1) {
      std::swap(t0, t1);
      face_sign = 1.0;
    }
    if (t0 > t_enter) {
      t_enter = t0;
      enter_axis = k;
      enter_sign = face_sign;
    }
    t_exit = std::min(t_exit, t1);
  }
  if (enter_axis < 0) return {};           // started inside every slab: no entry
  if (t_enter > t_exit) return {};         // misses the box
  if (t_enter < 0.0 || t_enter > 1.0) return {};  // entered earlier, or not yet

  EntryHit hit;
  hit.point = {a.x + t_enter * delta[0], a.y + t_enter * delta[1],
               a.z + t_enter * delta[2]};
  hit.face = (enter_axis == 2 && enter_sign > 0.0) ? BoxEntry::top : BoxEntry::lateral;
  return hit;
}

}  // namespace

EntryHit classify_entry(const Obb& b, Vec3 from, Vec3 to) {
  Vec3 a = point_in_frame(b.center, from);
  Vec3 bb = point_in_frame(b.center, to);
  EntryHit hit = classify_entry_local(b.hx, b.hy, b.hz, a, bb);
  if (hit.face != BoxEntry::none) hit.point = point_to_world(b.center, hit.point);
  return hit;
}

double closing_extent(const Obb& b, double gripper_yaw) {
  double rel = normalize_angle(gripper_yaw - b.center.yaw);
  return 2.0 * (b.hx * std::abs(std::sin(rel)) + b.hy * std::abs(std::cos(rel)));
}

WorldState reset(const EnvConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  Rng rng(seed);
  WorldState ws;
  ws.robot_base = make_pose(0, 0, 0, 0);

  ws.plate_center.x = rng.uniform(kMoverXMin, kMoverXMax);
  ws.plate_center.y = rng.uniform(kMoverYMin, kMoverYMax);
  ws.plate_yaw = rng.uniform_open_closed(-std::numbers::pi, std::numbers::pi);

  double gx = rng.uniform(kRobotXMin, kRobotXMax);
  double gy = rng.uniform(kRobotYMin, kRobotYMax);
  double gyaw = rng.uniform_open_closed(-std::numbers::pi, std::numbers::pi);
  ws.gripper = make_pose(gx, gy, kRobotZMax, gyaw);

  ws.object.hx = cfg.object.hx;
  ws.object.hy = cfg.object.hy;
  ws.object.hz = cfg.object.hz;
  ws.object.center = make_pose(ws.plate_center.x, ws.plate_center.y,
                               kPlateSurfaceZ + cfg.object.hz, ws.plate_yaw);
  ws.object_offset = {0.0, 0.0};
  ws.object_yaw_offset = 0.0;
  ws.initial_object_z = ws.object.center.z;
  ws.gripper_in_box = contains(ws.object, gripper_point(ws));
  ws.entered_top = false;
  return ws;
}

void place_plate(WorldState& ws, const EnvConfig& cfg, Vec2 xy) {
  (void)cfg;
  ws.plate_center = clamp_area(xy, kMoverArea);
  if (!ws.attached) {
    ws.object.center.x = ws.plate_center.x + ws.object_offset.x;
    ws.object.center.y = ws.plate_center.y + ws.object_offset.y;
    ws.object.center.z = rest_z(ws);
    ws.object.center.yaw = normalize_angle(ws.plate_yaw + ws.object_yaw_offset);
  }
  ws.gripper_in_box = contains(ws.object, gripper_point(ws));
  if (!ws.gripper_in_box) ws.entered_top = false;
}

StepResult step(const EnvConfig& cfg, const WorldState& ws,
                const RobotAction& a1, const MoverAction& a2) {
  if (ws.terminal != Terminal::none)
    throw std::logic_error("step() on a terminal episode");

  WorldState next = ws;
  StepEvents ev;
  Vec3 prev_gpos = gripper_point(ws);
  Obb prev_box = ws.object;

  // plate motion; the object rides it while unattached
  double mover_step = cfg.speed_ratio * cfg.robot_speed * cfg.dt;
  Vec2 dir{a2.x, a2.y};
  double dn = norm(dir);
  if (dn > 1.0) dir = (1.0 / dn) * dir;
  next.plate_center = clamp_area(ws.plate_center + mover_step * dir, kMoverArea);
  double yaw_cmd = clampd(a2.yaw_rate, -1.0, 1.0);
  next.plate_yaw = normalize_angle(
      ws.plate_yaw + yaw_cmd * cfg.speed_ratio * cfg.robot_yaw_rate * cfg.dt);
  if (!ws.attached) {
    next.object.center.x = next.plate_center.x + ws.object_offset.x;
    next.object.center.y = next.plate_center.y + ws.object_offset.y;
    next.object.center.z = rest_z(ws);
    next.object.center.yaw = normalize_angle(next.plate_yaw + ws.object_yaw_offset);
  }

  // gripper motion toward the target the action encodes against the fresh
  // object pose; translation and yaw are rate-limited independently
  {
    double ox = clampd(a1.x, -kRobotActionXYMax, kRobotActionXYMax);
    double oy = clampd(a1.y, -kRobotActionXYMax, kRobotActionXYMax);
    double oz = clampd(a1.z, 0.0, kRobotActionZMax);
    double oyaw = clampd(a1.yaw, -kRobotActionYawMax, kRobotActionYawMax);
    Vec3 off = rotate_z(next.object.center.yaw, {ox, oy, 0.0});
    Vec3 target{next.object.center.x + off.x, next.object.center.y + off.y,
                next.object.center.z + oz};
    double target_yaw = normalize_angle(next.object.center.yaw + oyaw);

    Vec3 d = target - prev_gpos;
    double dist = norm(d);
    double max_move = cfg.robot_speed * cfg.dt;
    double s = dist > max_move ? max_move / dist : 1.0;
    next.gripper.x = clampd(prev_gpos.x + s * d.x, kRobotXMin, kRobotXMax);
    next.gripper.y = clampd(prev_gpos.y + s * d.y, kRobotYMin, kRobotYMax);
    next.gripper.z = clampd(prev_gpos.z + s * d.z, kRobotZMin, kRobotZMax);

    double dyaw = normalize_angle(target_yaw - ws.gripper.yaw);
    double max_turn = cfg.robot_yaw_rate * cfg.dt;
    next.gripper.yaw =
        normalize_angle(ws.gripper.yaw + clampd(dyaw, -max_turn, max_turn));
  }

  bool close_cmd = (a1.gripper == GripperCmd::close);
  bool close_transition = close_cmd && !ws.gripper_closed;
  next.gripper_closed = close_cmd;

  // opening the fingers drops a held object back onto the plate
  if (ws.attached && !close_cmd) {
    next.attached = false;
    Pose held = compose(next.gripper, ws.hold);
    next.object.center = make_pose(held.x, held.y, rest_z(ws), held.yaw);
    next.object_offset = {held.x - next.plate_center.x,
                          held.y - next.plate_center.y};
    next.object_yaw_offset = normalize_angle(held.yaw - next.plate_yaw);
    next.entered_top = false;
  }

  Vec3 gpos = gripper_point(next);

  if (next.attached) {
    // held object follows the gripper rigidly
    next.object.center = compose(next.gripper, ws.hold);
    next.gripper_in_box = contains(next.object, gpos);
  } else {
    bool inside_now = contains(next.object, gpos);
    if (!inside_now) {
      next.gripper_in_box = false;
      next.entered_top = false;
    } else if (ws.gripper_in_box) {
      // was inside, still inside: provenance carries over
      next.gripper_in_box = true;
    } else {
      // fresh entry: classify against the relative motion in box coordinates
      Vec3 a = point_in_frame(prev_box.center, prev_gpos);
      Vec3 b = point_in_frame(next.object.center, gpos);
      EntryHit hit = classify_entry_local(next.object.hx, next.object.hy,
                                          next.object.hz, a, b);
      if (hit.face == BoxEntry::top) {
        next.gripper_in_box = true;
        next.entered_top = true;
      } else {
        // lateral (or unresolvable) entry: collision; the object yields
        // horizontally until the gripper sits on the face it hit
        ev.collided = true;
        Vec2 push{b.x - hit.point.x, b.y - hit.point.y};
        if (hit.face == BoxEntry::none) push = {0.0, 0.0};
        Vec3 push_world = rotate_z(next.object.center.yaw, {push.x, push.y, 0.0});
        next.object.center.x += push_world.x;
        next.object.center.y += push_world.y;
        next.object_offset = {next.object.center.x - next.plate_center.x,
                              next.object.center.y - next.plate_center.y};
        next.gripper_in_box = false;
        next.entered_top = false;
      }
    }
  }

  // grasp: fingers must transition to closed while inside through the top,
  // and the object must fit between them at the current approach yaw
  if (!ws.attached && close_transition && next.entered_top &&
      closing_extent(next.object, next.gripper.yaw) <=
          cfg.gripper_max_opening + 1e-12) {
    next.attached = true;
    next.hold = relative_to(next.gripper, next.object.center);
  }

  if (next.attached &&
      next.object.center.z >= ws.initial_object_z + cfg.lift_threshold) {
    next.terminal = Terminal::grasped;
    ev.grasped_now = true;
  } else if (!next.attached && norm(next.object_offset) > cfg.plate_radius) {
    next.terminal = Terminal::out_of_plate;
    ev.out_of_plate = true;
  }

  next.step_index = ws.step_index + 1;
  if (next.terminal == Terminal::none && next.step_index >= cfg.max_steps) {
    next.terminal = Terminal::timeout;
    ev.timeout = true;
  }

  ev.d12 = gripper_object_distance(next.gripper, next.object);
  ev.inside_bbox = next.gripper_in_box;
  return {next, ev};
}

ObsVector robot_observation(const WorldState& ws) {
  Pose lead = relative_to(ws.robot_base, ws.gripper);
  return assemble_observation(lead, obb_keypoints(ws.object, ws.gripper));
}

ObsVector mover_observation(const WorldState& ws) {
  Pose lead = relative_to(ws.object.center, ws.gripper);
  return assemble_observation(lead, obb_keypoints(ws.object, ws.object.center));
}

const char* kTrajectoryHeader =
    "step,g_x,g_y,g_z,g_yaw,o_x,o_y,o_z,o_yaw,plate_x,plate_y,"
    "inside_bbox,collided,grasped,out_of_plate,timeout,d12";

void write_trajectory(std::ostream& os, const std::vector<TrajectoryRow>& rows) {
  os << kTrajectoryHeader << '\n';
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                  "%.17g,%d,%d,%d,%d,%d,%.17g",
                  r.step, r.gripper.x, r.gripper.y, r.gripper.z, r.gripper.yaw,
                  r.object.x, r.object.y, r.object.z, r.object.yaw, r.plate.x,
                  r.plate.y, r.events.inside_bbox ? 1 : 0,
                  r.events.collided ? 1 : 0, r.events.grasped_now ? 1 : 0,
                  r.events.out_of_plate ? 1 : 0, r.events.timeout ? 1 : 0,
                  r.events.d12);
    os << buf << '\n';
  }
}

}  // namespace advgrasp
