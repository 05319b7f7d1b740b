#include "advgrasp/geometry.hpp"

#include <cmath>
#include <numbers>

namespace advgrasp {

double norm(Vec2 v) { return std::sqrt(v.x * v.x + v.y * v.y); }
double norm(Vec3 v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }

double normalize_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

Pose make_pose(double x, double y, double z, double yaw) {
  return Pose{x, y, z, normalize_angle(yaw)};
}

Vec3 rotate_z(double yaw, Vec3 v) {
  double c = std::cos(yaw), s = std::sin(yaw);
  return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

Pose compose(const Pose& a, const Pose& b) {
  Vec3 t = rotate_z(a.yaw, {b.x, b.y, b.z});
  return make_pose(a.x + t.x, a.y + t.y, a.z + t.z, a.yaw + b.yaw);
}

Pose inverse(const Pose& p) {
  Vec3 t = rotate_z(-p.yaw, {-p.x, -p.y, -p.z});
  return make_pose(t.x, t.y, t.z, -p.yaw);
}

Pose relative_to(const Pose& frame, const Pose& target) {
  return compose(inverse(frame), target);
}

Vec3 point_in_frame(const Pose& frame, Vec3 p_world) {
  return rotate_z(-frame.yaw,
                  {p_world.x - frame.x, p_world.y - frame.y, p_world.z - frame.z});
}

Vec3 point_to_world(const Pose& frame, Vec3 p_frame) {
  Vec3 r = rotate_z(frame.yaw, p_frame);
  return {frame.x + r.x, frame.y + r.y, frame.z + r.z};
}

std::array<Vec3, 8> obb_corners(const Obb& b) {
  std::array<Vec3, 8> out;
  int i = 0;
  for (int sx = -1; sx <= 1; sx += 2)
    for (int sy = -1; sy <= 1; sy += 2)
      for (int sz = -1; sz <= 1; sz += 2)
        out[i++] = point_to_world(b.center, {sx * b.hx, sy * b.hy, sz * b.hz});
  return out;
}

std::array<Vec3, 9> obb_keypoints(const Obb& b, const Pose& frame) {
  auto corners = obb_corners(b);
  std::array<Vec3, 9> out;
  for (int i = 0; i < 8; ++i) out[i] = point_in_frame(frame, corners[i]);
  out[8] = point_in_frame(frame, {b.center.x, b.center.y, b.center.z});
  return out;
}

bool contains(const Obb& b, Vec3 p_world) {
  Vec3 l = point_in_frame(b.center, p_world);
  return std::abs(l.x) <= b.hx && std::abs(l.y) <= b.hy && std::abs(l.z) <= b.hz;
}

double top_z(const Obb& b) {
  auto corners = obb_corners(b);
  double m = corners[0].z;
  for (const auto& c : corners) m = std::max(m, c.z);
  return m;
}

double gripper_object_distance(const Pose& gripper, const Obb& object) {
  double dx = gripper.x - object.center.x;
  double dy = gripper.y - object.center.y;
  double dz = gripper.z - top_z(object);
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

ObsVector assemble_observation(const Pose& lead, const std::array<Vec3, 9>& kps) {
  ObsVector o{};
  o[0] = lead.x;
  o[1] = lead.y;
  o[2] = lead.z;
  o[3] = lead.yaw;
  for (int i = 0; i < 9; ++i) {
    o[4 + 3 * i + 0] = kps[i].x;
    o[4 + 3 * i + 1] = kps[i].y;
    o[4 + 3 * i + 2] = kps[i].z;
  }
  return o;
}

}  // namespace advgrasp
