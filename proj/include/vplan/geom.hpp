#pragma once

// Slice-pose algebra: pixel <-> patient transforms, planes, plane-plane
// intersection, spherical normals and line clipping.
//
// Pixel convention: x = column index, y = row index, (0,0) is the center of
// the first pixel. Patient coordinates are in mm.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "vplan/error.hpp"

namespace vplan {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

inline constexpr double kUnitTolerance = 1e-9;
inline constexpr double kParallelTolerance = 1e-8;
inline constexpr double kClipSlack = 1e-6;
inline constexpr double kInPlaneTolerance = 1e-6;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double deg2rad(double d) { return d * kPi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

/// Placement of a 2D image in patient space.
///
/// `row_dir` is the direction of increasing column index and `col_dir` the
/// direction of increasing row index (the DICOM ImageOrientationPatient
/// ordering). The constructor enforces orthonormality and positive extents.
class SlicePose {
 public:
  SlicePose(const Vec3& origin, const Vec3& row_dir, const Vec3& col_dir,
            double spacing_x, double spacing_y, int cols, int rows,
            double thickness)
      : origin_(origin),
        row_dir_(row_dir),
        col_dir_(col_dir),
        spacing_x_(spacing_x),
        spacing_y_(spacing_y),
        cols_(cols),
        rows_(rows),
        thickness_(thickness) {
    if (auto why = check(); !why.empty()) throw InvariantViolation(why);
  }

  const Vec3& origin() const { return origin_; }
  const Vec3& row_dir() const { return row_dir_; }
  const Vec3& col_dir() const { return col_dir_; }
  double spacing_x() const { return spacing_x_; }
  double spacing_y() const { return spacing_y_; }
  double mean_spacing() const { return 0.5 * (spacing_x_ + spacing_y_); }
  int cols() const { return cols_; }
  int rows() const { return rows_; }
  double thickness() const { return thickness_; }
  Vec3 normal() const { return row_dir_.cross(col_dir_).normalized(); }
  Vec2 center_pixel() const {
    return {0.5 * (cols_ - 1), 0.5 * (rows_ - 1)};
  }

  bool operator==(const SlicePose&) const = default;

 private:
  std::string check() const {
    std::ostringstream why;
    if (!origin_.allFinite() || !row_dir_.allFinite() || !col_dir_.allFinite())
      why << "non-finite pose component";
    else if (std::abs(row_dir_.norm() - 1.0) > kUnitTolerance)
      why << "row direction is not unit length (|r| = " << row_dir_.norm() << ")";
    else if (std::abs(col_dir_.norm() - 1.0) > kUnitTolerance)
      why << "column direction is not unit length (|c| = " << col_dir_.norm() << ")";
    else if (std::abs(row_dir_.dot(col_dir_)) > kUnitTolerance)
      why << "direction cosines are not orthogonal (r.c = " << row_dir_.dot(col_dir_) << ")";
    else if (!(spacing_x_ > 0.0) || !(spacing_y_ > 0.0))
      why << "pixel spacing must be positive";
    else if (!(thickness_ > 0.0))
      why << "slice thickness must be positive";
    else if (cols_ < 2 || rows_ < 2)
      why << "image extent must be at least 2x2";
    return why.str();
  }

  Vec3 origin_;
  Vec3 row_dir_;
  Vec3 col_dir_;
  double spacing_x_;
  double spacing_y_;
  int cols_;
  int rows_;
  double thickness_;
};

struct Plane3D {
  Vec3 point;
  Vec3 normal;

  Plane3D(const Vec3& p, const Vec3& n) : point(p), normal(n) {
    double len = n.norm();
    if (!(len > 0.0) || !std::isfinite(len))
      throw InvariantViolation("plane normal must be a non-zero finite vector");
    // Leave unit normals untouched so that re-normalizing is idempotent.
    if (std::abs(len - 1.0) > 4 * std::numeric_limits<double>::epsilon()) normal /= len;
  }

  double signed_distance(const Vec3& x) const { return normal.dot(x - point); }

  bool operator==(const Plane3D&) const = default;
};

struct Line3D {
  Vec3 point;
  Vec3 direction;

  Vec3 at(double t) const { return point + t * direction; }
  double distance(const Vec3& x) const {
    Vec3 d = x - point;
    return (d - d.dot(direction) * direction).norm();
  }
};

/// a*x + b*y + c = 0 in pixel coordinates, kept in canonical form:
/// a^2 + b^2 = 1 and the first nonzero of (a, b) positive.
struct Line2D {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;

  static Line2D canonical(double a, double b, double c) {
    double n = std::hypot(a, b);
    if (!(n > 0.0) || !std::isfinite(n))
      throw InvariantViolation("line needs a^2 + b^2 > 0");
    a /= n;
    b /= n;
    c /= n;
    if (a < 0.0 || (a == 0.0 && b < 0.0)) {
      a = -a;
      b = -b;
      c = -c;
    }
    return {a, b, c};
  }

  static Line2D through(const Vec2& p, const Vec2& q) {
    double a = q.y() - p.y();
    double b = p.x() - q.x();
    return canonical(a, b, -(a * p.x() + b * p.y()));
  }

  double eval(const Vec2& p) const { return a * p.x() + b * p.y() + c; }
  double distance(const Vec2& p) const { return std::abs(eval(p)); }
  Vec2 foot() const { return {-a * c, -b * c}; }
  Vec2 direction() const { return {-b, a}; }

  bool operator==(const Line2D&) const = default;
};

/// Clipped piece of a Line2D inside an image rectangle (continuous pixels).
struct Segment2D {
  Vec2 start;
  Vec2 end;

  double length() const { return (end - start).norm(); }
};

struct SphericalAngles {
  double theta = 0.0;  // polar, degrees in [0, 180]
  double phi = 0.0;    // azimuth, degrees in [0, 360)
};

// ---------------------------------------------------------------------------

inline Plane3D pose_to_plane(const SlicePose& pose) {
  return Plane3D(pose.origin(), pose.row_dir().cross(pose.col_dir()));
}

inline Vec3 image_to_patient(const SlicePose& pose, const Vec2& px) {
  return pose.origin() + px.x() * pose.spacing_x() * pose.row_dir() +
         px.y() * pose.spacing_y() * pose.col_dir();
}

struct ImagePoint {
  Vec2 px;
  double out_of_plane_mm;
};

inline ImagePoint patient_to_image(const SlicePose& pose, const Vec3& pt) {
  Vec3 d = pt - pose.origin();
  return {{d.dot(pose.row_dir()) / pose.spacing_x(),
           d.dot(pose.col_dir()) / pose.spacing_y()},
          d.dot(pose.normal())};
}

inline Line3D intersect_planes(const Plane3D& p1, const Plane3D& p2) {
  Vec3 d = p1.normal.cross(p2.normal);
  double len2 = d.squaredNorm();
  if (std::sqrt(len2) < kParallelTolerance) throw ParallelPlanes("planes are parallel");
  double h1 = p1.normal.dot(p1.point);
  double h2 = p2.normal.dot(p2.point);
  // Both terms are orthogonal to d, so this is the point closest to the origin.
  Vec3 point = (h1 * p2.normal.cross(d) + h2 * d.cross(p1.normal)) / len2;
  return {point, d / std::sqrt(len2)};
}

inline Line2D line3d_to_line2d(const Line3D& line, const SlicePose& pose) {
  // Sample the second point one image diagonal away so the 2D direction is
  // well conditioned.
  double reach = std::hypot(pose.cols() * pose.spacing_x(), pose.rows() * pose.spacing_y());
  ImagePoint p = patient_to_image(pose, line.point);
  ImagePoint q = patient_to_image(pose, line.at(reach));
  if (std::abs(p.out_of_plane_mm) > kInPlaneTolerance ||
      std::abs(q.out_of_plane_mm) > kInPlaneTolerance) {
    std::ostringstream msg;
    msg << "line is not in the slice plane (residuals " << p.out_of_plane_mm << ", "
        << q.out_of_plane_mm << " mm)";
    throw LineNotInPlane(msg.str());
  }
  return Line2D::through(p.px, q.px);
}

/// Trace of a plane in a slice expressed directly in pixel coordinates.
/// Absent when the plane is parallel to the slice. Equivalent to
/// intersect_planes followed by line3d_to_line2d, without the round trip.
inline std::optional<Line2D> plane_trace(const Plane3D& plane, const SlicePose& pose) {
  double nr = plane.normal.dot(pose.row_dir());
  double nc = plane.normal.dot(pose.col_dir());
  if (std::hypot(nr, nc) < kParallelTolerance) return std::nullopt;
  return Line2D::canonical(nr * pose.spacing_x(), nc * pose.spacing_y(),
                           plane.normal.dot(pose.origin() - plane.point));
}

/// Clip an infinite line against [0, cols-1] x [0, rows-1]. Endpoints are
/// ordered along Line2D::direction().
inline std::optional<Segment2D> clip_line(const Line2D& line, int cols, int rows) {
  const Vec2 p0 = line.foot();
  const Vec2 d = line.direction();
  const std::array<double, 2> hi = {cols - 1.0, rows - 1.0};
  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 2; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (p0[k] < -kClipSlack || p0[k] > hi[k] + kClipSlack) return std::nullopt;
      continue;
    }
    double t0 = (0.0 - p0[k]) / d[k];
    double t1 = (hi[k] - p0[k]) / d[k];
    if (t0 > t1) std::swap(t0, t1);
    t_lo = std::max(t_lo, t0);
    t_hi = std::min(t_hi, t1);
  }
  // A line grazing a corner produces t_lo slightly above t_hi.
  if (t_lo > t_hi + kClipSlack) return std::nullopt;
  if (t_lo > t_hi) t_lo = t_hi = 0.5 * (t_lo + t_hi);
  auto clamp = [&](Vec2 p) {
    p.x() = std::clamp(p.x(), 0.0, hi[0]);
    p.y() = std::clamp(p.y(), 0.0, hi[1]);
    return p;
  };
  return Segment2D{clamp(p0 + t_lo * d), clamp(p0 + t_hi * d)};
}

inline std::optional<Segment2D> clip_line(const Line2D& line, const SlicePose& pose) {
  return clip_line(line, pose.cols(), pose.rows());
}

inline Vec3 normal_from_angles(const SphericalAngles& a) {
  double t = deg2rad(a.theta);
  double p = deg2rad(a.phi);
  return {std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t)};
}

inline SphericalAngles angles_from_normal(const Vec3& n) {
  double rho = std::hypot(n.x(), n.y());
  double theta = rad2deg(std::atan2(rho, n.z()));
  if (rho < 1e-15) return {theta, 0.0};
  double phi = rad2deg(std::atan2(n.y(), n.x()));
  if (phi < 0.0) phi += 360.0;
  if (phi >= 360.0) phi = 0.0;
  return {theta, phi};
}

/// Build a pose whose image center sits at `center`. The column direction is
/// `col_hint` projected into the plane.
inline SlicePose make_centered_pose(const Vec3& center, const Vec3& normal,
                                    const Vec3& col_hint, int cols, int rows,
                                    double spacing_x, double spacing_y,
                                    double thickness) {
  Vec3 n = normal.normalized();
  Vec3 c = col_hint - col_hint.dot(n) * n;
  if (c.norm() < 1e-6) throw DegenerateGeometry("column hint is parallel to the slice normal");
  c.normalize();
  Vec3 r = c.cross(n);
  Vec3 origin = center - 0.5 * (cols - 1) * spacing_x * r - 0.5 * (rows - 1) * spacing_y * c;
  return SlicePose(origin, r, c, spacing_x, spacing_y, cols, rows, thickness);
}

}  // namespace vplan
