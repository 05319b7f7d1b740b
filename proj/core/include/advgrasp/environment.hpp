#pragma once

#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <string>
#include <vector>

#include "advgrasp/geometry.hpp"

namespace advgrasp {

// Gripper workspace, world frame, meters.
inline constexpr double kRobotXMin = 0.2, kRobotXMax = 0.6;
inline constexpr double kRobotYMin = -0.5, kRobotYMax = 0.5;
inline constexpr double kRobotZMin = 0.055, kRobotZMax = 0.3;

// Plate travel area (plate center).
inline constexpr double kMoverXMin = 0.25, kMoverXMax = 0.55;
inline constexpr double kMoverYMin = -0.45, kMoverYMax = 0.45;

// Top surface of the carrier plate; objects rest on it.
inline constexpr double kPlateSurfaceZ = 0.02;

struct Area2 {
  double x_min, x_max, y_min, y_max;
};
inline constexpr Area2 kMoverArea{kMoverXMin, kMoverXMax, kMoverYMin, kMoverYMax};

struct ObjectTemplate {
  std::string name;
  double hx = 0.0, hy = 0.0, hz = 0.0;  // half extents, meters
};

// Six tabletop boxes. Half extents are project measurements of the usual
// suspects; at least one horizontal axis of each fits the gripper opening.
const std::vector<ObjectTemplate>& object_catalog();
const ObjectTemplate& object_by_name(const std::string& name);

struct EnvConfig {
  double dt = 0.1;                  // s
  double robot_speed = 0.15;        // m/s translational clamp
  double robot_yaw_rate = 0.75;     // rad/s clamp
  double speed_ratio = 0.5;         // mover translational speed / robot_speed
  double plate_radius = 0.1;        // m, object escape radius
  double lift_threshold = 0.1;      // m of object rise that counts as success
  int max_steps = 300;
  double gripper_max_opening = 0.08;  // m between closed fingers
  ObjectTemplate object{"rubiks_cube", 0.0285, 0.0285, 0.0285};
};

// Throws std::invalid_argument naming the offending field.
void validate(const EnvConfig& cfg);

enum class Terminal { none, grasped, out_of_plate, timeout };
const char* to_string(Terminal t);

enum class GripperCmd { open, close };

// Robot action: gripper target relative to the object. x, y are offsets from
// the object center expressed in the object frame; z is height above the
// object center; yaw is the offset from the object yaw.
struct RobotAction {
  double x = 0.0, y = 0.0;  // each in [-0.3, 0.3]
  double z = 0.0;           // [0, 0.3]
  double yaw = 0.0;         // [-pi/2, pi/2]
  GripperCmd gripper = GripperCmd::open;
};

inline constexpr double kRobotActionXYMax = 0.3;
inline constexpr double kRobotActionZMax = 0.3;
inline constexpr double kRobotActionYawMax = std::numbers::pi / 2.0;

// Mover action: plate velocity direction in [-1, 1]^2 (clipped to unit norm,
// scaled by the mover speed) plus a plate yaw rate command in [-1, 1].
struct MoverAction {
  double x = 0.0, y = 0.0;
  double yaw_rate = 0.0;
};

struct StepEvents {
  double d12 = 0.0;          // gripper-to-object anchor distance after motion
  bool inside_bbox = false;  // gripper center inside the object box
  bool collided = false;     // gripper crossed a lateral face this step
  bool grasped_now = false;  // lift success fired this step
  bool out_of_plate = false;
  bool timeout = false;
};

struct WorldState {
  Pose robot_base;     // world origin; kept explicit for observation frames
  Pose gripper;        // tool point
  bool gripper_closed = false;
  Obb object;
  Vec2 plate_center;
  double plate_yaw = 0.0;
  Vec2 object_offset;  // object center minus plate center, world axes
  double object_yaw_offset = 0.0;  // object yaw minus plate yaw while riding
  bool attached = false;
  Pose hold;                 // object pose in gripper frame while attached
  bool gripper_in_box = false;
  bool entered_top = false;  // current containment began through the top face
  double initial_object_z = 0.0;
  int step_index = 0;
  Terminal terminal = Terminal::none;
};

// Fresh episode: plate pose and gripper pose drawn uniformly (plate position,
// plate yaw, gripper x/y, gripper yaw, in that order), gripper starting at
// the workspace ceiling, object centered on the plate at rest height.
WorldState reset(const EnvConfig& cfg, std::uint64_t seed);

// Moves the plate (and the object riding it) to xy clamped into the mover
// area. Used to start an episode on a prescribed motion curve.
void place_plate(WorldState& ws, const EnvConfig& cfg, Vec2 xy);

struct StepResult {
  WorldState state;
  StepEvents events;
};

// One synchronous step: both actions are applied to the same pre-step state.
// Plate motion first, then gripper motion, then event detection in the order
// collision, grasp, lift success, escape, timeout. Throws std::logic_error if
// the episode is already terminal.
StepResult step(const EnvConfig& cfg, const WorldState& ws,
                const RobotAction& a1, const MoverAction& a2);

enum class BoxEntry { none, top, lateral };
struct EntryHit {
  BoxEntry face = BoxEntry::none;
  Vec3 point;  // world point where the segment crosses the box surface
};

// Classifies how the segment from->to first enters the box (slab method).
// Returns none when the segment never reaches the interior.
EntryHit classify_entry(const Obb& b, Vec3 from, Vec3 to);

// Width the fingers must span when closing at the given world yaw: the
// object's horizontal support along the gripper's closing axis (local y).
double closing_extent(const Obb& b, double gripper_yaw);

ObsVector robot_observation(const WorldState& ws);
ObsVector mover_observation(const WorldState& ws);

struct TrajectoryRow {
  int step = 0;
  Pose gripper;
  Pose object;
  Vec2 plate;
  StepEvents events;
};

extern const char* kTrajectoryHeader;
void write_trajectory(std::ostream& os, const std::vector<TrajectoryRow>& rows);

}  // namespace advgrasp
