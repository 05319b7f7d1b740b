#pragma once

#include <array>

namespace advgrasp {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }

double norm(Vec2 v);
double norm(Vec3 v);

// Rigid pose in a z-up world. Orientation is yaw about +z only; the grasp
// problem never tilts the gripper or the object.
struct Pose {
  double x = 0.0, y = 0.0, z = 0.0;
  double yaw = 0.0;  // kept in (-pi, pi]
};

// Wraps into (-pi, pi].
double normalize_angle(double a);

Pose make_pose(double x, double y, double z, double yaw);

// a then b: the pose of frame b expressed in the parent of a.
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);
// target expressed in `frame` coordinates: inverse(frame) * target.
Pose relative_to(const Pose& frame, const Pose& target);

Vec3 rotate_z(double yaw, Vec3 v);
// World point -> frame coordinates.
Vec3 point_in_frame(const Pose& frame, Vec3 p_world);
// Frame point -> world coordinates.
Vec3 point_to_world(const Pose& frame, Vec3 p_frame);

// Yaw-only oriented box: center pose plus half extents along local x, y, z.
struct Obb {
  Pose center;
  double hx = 0.0, hy = 0.0, hz = 0.0;
};

// Corners in world coordinates, fixed order: local sign triples
// (-,-,-) (-,-,+) (-,+,-) (-,+,+) (+,-,-) (+,-,+) (+,+,-) (+,+,+),
// i.e. z sign flips fastest. Consumers (observations, tests) rely on it.
std::array<Vec3, 8> obb_corners(const Obb& b);

// The 8 corners followed by the center, expressed in `frame`.
std::array<Vec3, 9> obb_keypoints(const Obb& b, const Pose& frame);

// Closed-face containment: boundary points count as inside.
bool contains(const Obb& b, Vec3 p_world);

// Max world z over the corners. For a yaw-only box this is center z + hz,
// kept as a corner scan so tilting support can land later without callers
// changing.
double top_z(const Obb& b);

// Distance from the gripper point to the (x, y, top) anchor of the box:
// planar offset to the center, vertical offset to the top plane. Drives both
// shaping rewards.
double gripper_object_distance(const Pose& gripper, const Obb& object);

inline constexpr int kObsDim = 31;
using ObsVector = std::array<double, kObsDim>;

// Observation layout, both roles: 4 pose scalars followed by 9 keypoints
// (x, y, z each). Robot: gripper in robot-base frame + keypoints in gripper
// frame. Mover: gripper in object frame + keypoints in object frame.
// Everything is relative, so world translations cancel.
ObsVector assemble_observation(const Pose& lead, const std::array<Vec3, 9>& kps);

}  // namespace advgrasp
