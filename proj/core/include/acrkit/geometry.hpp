#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace acrkit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Orthonormal 3x3 rotation matrix with determinant +1.
///
/// Construction validates the matrix; products that drift beyond 1e-9 from
/// orthonormality are projected back onto SO(3).
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  /// Throws invalid-input when `m` is not a rotation within 1e-6.
  static Rotation from_matrix(const Mat3& m);
  /// Closest rotation in the Frobenius sense (SVD projection).
  static Rotation nearest(const Mat3& m);
  static Rotation from_quaternion(const Eigen::Quaterniond& q);
  static Rotation from_axis_angle(const Vec3& axis, double angle_rad);
  /// Rotation vector (axis * angle) in radians.
  static Rotation exp(const Vec3& rotation_vector);
  static Rotation rx_deg(double deg);
  static Rotation ry_deg(double deg);
  static Rotation rz_deg(double deg);

  const Mat3& matrix() const { return m_; }
  Rotation inverse() const;
  Eigen::Quaterniond quaternion() const;
  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  Rotation operator*(const Rotation& other) const;

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Rigid-body transform x' = R x + t.
struct Pose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
};

/// Rotation plus unit translation direction; the scale-free two-view estimate.
class DirectionalPose {
 public:
  DirectionalPose() : direction_(0.0, 0.0, 1.0) {}
  /// Normalizes `direction`; throws degenerate-direction for zero input.
  DirectionalPose(Rotation rotation, const Vec3& direction);

  const Rotation& rotation() const { return rotation_; }
  const Vec3& direction() const { return direction_; }
  Pose with_scale(double scale) const { return {rotation_, direction_ * scale}; }

 private:
  Rotation rotation_;
  Vec3 direction_;
};

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  /// Throws invalid-intrinsics unless fx, fy are positive and finite.
  void validate() const;
  Mat3 matrix() const;
  Mat3 inverse() const;
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;

  Vec3 homogeneous() const { return {u, v, 1.0}; }
  Vec2 vec() const { return {u, v}; }
  bool operator==(const PixelPoint&) const = default;
};

/// Applies b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& p);

/// Geodesic angle of a rotation, degrees in [0, 180].
double rotation_angle(const Rotation& r);
/// Angle between two directions, degrees in [0, 180]. Inputs need not be
/// exactly unit; zero-norm input throws degenerate-direction.
double direction_angle(const Vec3& a, const Vec3& b);
/// Euler angles (roll, pitch, yaw) in degrees of R = Rz(yaw) Ry(pitch) Rx(roll).
Vec3 euler_angles_deg(const Rotation& r);

/// Pinhole projection of a world point seen from camera extrinsics `pose`.
PixelPoint project(const Intrinsics& intr, const Pose& pose, const Vec3& point);
/// Inverse of `project` for a known camera-frame depth.
Vec3 back_project(const Intrinsics& intr, const Pose& pose, const PixelPoint& q,
                  double depth);

Mat3 skew(const Vec3& v);

constexpr double kPi = 3.14159265358979323846;
constexpr double deg2rad(double d) { return d * kPi / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace acrkit
