#include "scenebench/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scenebench::geometry {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

}  // namespace

Pose::Pose(const Vec3& p, const Quat& q) : position(p), orientation(q) {
  const double n = orientation.norm();
  if (std::abs(n - 1.0) > 1e-9) {
    orientation.coeffs() /= n;
  }
}

Quat quat_from_yaw(double yaw) {
  return Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
}

double yaw_from_quat(const Quat& q) {
  const Vec3 x_axis = q * Vec3::UnitX();
  return std::atan2(x_axis.y(), x_axis.x());
}

double quat_geodesic(const Quat& q1, const Quat& q2) {
  const double dot = std::abs(q1.dot(q2));
  return 2.0 * std::acos(std::min(1.0, dot));
}

double pose_distance(const Pose& a, const Pose& b, double beta) {
  return (a.position - b.position).norm() +
         beta * quat_geodesic(a.orientation, b.orientation);
}

Obb::Obb(const Vec3& c, const Vec3& h, double yaw_angle)
    : center(c), half(h), yaw(wrap_angle(yaw_angle)) {}

std::array<Eigen::Vector2d, 4> Obb::footprint() const {
  const double cy = std::cos(yaw);
  const double sy = std::sin(yaw);
  const Eigen::Vector2d ux(cy, sy);
  const Eigen::Vector2d uy(-sy, cy);
  const Eigen::Vector2d c(center.x(), center.y());
  const Eigen::Vector2d ex = half.x() * ux;
  const Eigen::Vector2d ey = half.y() * uy;
  return {c + ex + ey, c - ex + ey, c - ex - ey, c + ex - ey};
}

void Obb::footprint_aabb(double& xmin, double& xmax, double& ymin,
                         double& ymax) const {
  const auto corners = footprint();
  xmin = ymin = std::numeric_limits<double>::infinity();
  xmax = ymax = -std::numeric_limits<double>::infinity();
  for (const auto& p : corners) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
}

namespace {

// Separation along one axis for the 2D footprints: positive = gap between the
// projected intervals, negative = overlap depth. half-extents are inflated by
// inflate on each box.
double axis_separation(const Obb& a, const Obb& b, const Eigen::Vector2d& axis,
                       double inflate) {
  const Eigen::Vector2d d(b.center.x() - a.center.x(),
                          b.center.y() - a.center.y());
  const double dist = std::abs(d.dot(axis));

  auto radius = [&](const Obb& o) {
    const double cy = std::cos(o.yaw);
    const double sy = std::sin(o.yaw);
    const Eigen::Vector2d ux(cy, sy);
    const Eigen::Vector2d uy(-sy, cy);
    return (o.half.x() + inflate) * std::abs(ux.dot(axis)) +
           (o.half.y() + inflate) * std::abs(uy.dot(axis));
  };

  return dist - radius(a) - radius(b);
}

std::array<Eigen::Vector2d, 4> sat_axes(const Obb& a, const Obb& b) {
  const double ca = std::cos(a.yaw);
  const double sa = std::sin(a.yaw);
  const double cb = std::cos(b.yaw);
  const double sb = std::sin(b.yaw);
  return {Eigen::Vector2d(ca, sa), Eigen::Vector2d(-sa, ca),
          Eigen::Vector2d(cb, sb), Eigen::Vector2d(-sb, cb)};
}

}  // namespace

bool obb_overlap(const Obb& a, const Obb& b, double margin) {
  if (a.top() <= b.bottom() || b.top() <= a.bottom()) return false;
  const double inflate = 0.5 * margin;
  for (const auto& axis : sat_axes(a, b)) {
    if (axis_separation(a, b, axis, inflate) >= 0.0) return false;
  }
  return true;
}

double obb_clearance_xy(const Obb& a, const Obb& b) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& axis : sat_axes(a, b)) {
    best = std::max(best, axis_separation(a, b, axis, 0.0));
  }
  return best;
}

double obb_penetration_xy(const Obb& a, const Obb& b) {
  double depth = std::numeric_limits<double>::infinity();
  for (const auto& axis : sat_axes(a, b)) {
    const double sep = axis_separation(a, b, axis, 0.0);
    if (sep >= 0.0) return 0.0;
    depth = std::min(depth, -sep);
  }
  return depth;
}

Obb top_surface_region(const Obb& box) {
  Obb region = box;
  region.center.z() = box.top();
  region.half.z() = 0.0;
  return region;
}

}  // namespace scenebench::geometry
