#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <array>

namespace scenebench::geometry {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

// Rigid pose. The quaternion is kept unit-norm; inputs that are already
// normalized pass through bit-for-bit so parse/serialize round-trips hold.
struct Pose {
  Vec3 position{0.0, 0.0, 0.0};
  Quat orientation{1.0, 0.0, 0.0, 0.0};

  Pose() = default;
  Pose(const Vec3& p, const Quat& q);
};

Quat quat_from_yaw(double yaw);
double yaw_from_quat(const Quat& q);

// Geodesic distance on SO(3): 2*arccos(min(1, |q1 . q2|)). Range [0, pi].
double quat_geodesic(const Quat& q1, const Quat& q2);

// Combined pose distance: ||p - p_ref|| + beta * d_SO3(q, q_ref).
double pose_distance(const Pose& a, const Pose& b, double beta = 1.0);

// Axis-aligned table workspace. z_top is the height of the table surface.
struct TableBounds {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
  double z_top = 0.0;

  double width() const { return x_max - x_min; }
  double depth() const { return y_max - y_min; }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }
  bool contains_xy(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
};

// Oriented bounding box restricted to yaw rotations about +Z. center is the
// box centroid; half is the half-extent along the local x/y/z axes; yaw is
// normalized to [-pi, pi).
struct Obb {
  Vec3 center{0.0, 0.0, 0.0};
  Vec3 half{0.0, 0.0, 0.0};
  double yaw = 0.0;

  Obb() = default;
  Obb(const Vec3& c, const Vec3& h, double yaw_angle);

  // World-space footprint corners at the box's mid-height, CCW order.
  std::array<Eigen::Vector2d, 4> footprint() const;

  // Axis-aligned bounds of the footprint.
  void footprint_aabb(double& xmin, double& xmax, double& ymin,
                      double& ymax) const;

  double bottom() const { return center.z() - half.z(); }
  double top() const { return center.z() + half.z(); }
};

// Separating-axis overlap test for yaw-only OBBs. Each box's horizontal
// half-extents are inflated by margin/2 before testing, so margin is the
// required clearance between the original boxes. Touching exactly at the
// inflated boundary counts as non-overlapping. Boxes that are separated
// vertically never overlap regardless of footprint.
bool obb_overlap(const Obb& a, const Obb& b, double margin = 0.0);

// Signed horizontal clearance between footprints: the largest separation over
// the four SAT axes. Positive means clear by that distance, negative means
// penetrating by that depth. Ignores the vertical axis.
double obb_clearance_xy(const Obb& a, const Obb& b);

// Penetration depth used to resolve an overlap: the smallest overlap across
// the SAT axes, zero when the boxes are separated.
double obb_penetration_xy(const Obb& a, const Obb& b);

// The horizontal rectangle of the top face, as an Obb with zero height whose
// center sits at the top surface.
Obb top_surface_region(const Obb& box);

}  // namespace scenebench::geometry
