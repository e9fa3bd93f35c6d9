#include "acrkit/geometry.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

#include "acrkit/error.hpp"

namespace acrkit {
namespace {

constexpr double kDriftTolerance = 1e-9;
constexpr double kAcceptTolerance = 1e-6;

double orthonormality_drift(const Mat3& m) {
  return (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
}

Mat3 project_to_so3(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Mat3 tidy(const Mat3& m) {
  if (orthonormality_drift(m) > kDriftTolerance ||
      std::abs(m.determinant() - 1.0) > kDriftTolerance) {
    return project_to_so3(m);
  }
  return m;
}

}  // namespace

Rotation Rotation::from_matrix(const Mat3& m) {
  if (!m.allFinite() || orthonormality_drift(m) > kAcceptTolerance ||
      std::abs(m.determinant() - 1.0) > kAcceptTolerance) {
    throw Error(ErrorKind::kInvalidInput, "matrix is not a rotation");
  }
  return Rotation(tidy(m));
}

Rotation Rotation::nearest(const Mat3& m) {
  if (!m.allFinite()) throw Error(ErrorKind::kInvalidInput, "non-finite matrix");
  return Rotation(project_to_so3(m));
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
  return Rotation(tidy(q.normalized().toRotationMatrix()));
}

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle_rad) {
  const double n = axis.norm();
  if (n == 0.0) return Rotation();
  return Rotation(tidy(Eigen::AngleAxisd(angle_rad, axis / n).toRotationMatrix()));
}

Rotation Rotation::exp(const Vec3& rotation_vector) {
  return from_axis_angle(rotation_vector, rotation_vector.norm());
}

Rotation Rotation::rx_deg(double deg) { return from_axis_angle(Vec3::UnitX(), deg2rad(deg)); }
Rotation Rotation::ry_deg(double deg) { return from_axis_angle(Vec3::UnitY(), deg2rad(deg)); }
Rotation Rotation::rz_deg(double deg) { return from_axis_angle(Vec3::UnitZ(), deg2rad(deg)); }

Rotation Rotation::inverse() const { return Rotation(m_.transpose()); }

Eigen::Quaterniond Rotation::quaternion() const { return Eigen::Quaterniond(m_).normalized(); }

Rotation Rotation::operator*(const Rotation& other) const {
  return Rotation(tidy(m_ * other.m_));
}

DirectionalPose::DirectionalPose(Rotation rotation, const Vec3& direction)
    : rotation_(rotation) {
  const double n = direction.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorKind::kDegenerateDirection, "translation direction has zero norm");
  }
  direction_ = direction / n;
}

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy) ||
      !std::isfinite(cx) || !std::isfinite(cy)) {
    throw Error(ErrorKind::kInvalidIntrinsics, "focal lengths must be positive and finite");
  }
}

Mat3 Intrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Mat3 Intrinsics::inverse() const {
  validate();
  Mat3 k;
  k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return k;
}

Pose compose(const Pose& a, const Pose& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Pose invert(const Pose& p) {
  const Rotation r_inv = p.rotation.inverse();
  return {r_inv, -(r_inv * p.translation)};
}

double rotation_angle(const Rotation& r) {
  const Mat3& m = r.matrix();
  const double cos_angle = std::clamp((m.trace() - 1.0) * 0.5, -1.0, 1.0);
  // The antisymmetric part carries sin(angle) and keeps precision near 0.
  const Vec3 axis_sin(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
  const double sin_angle = std::min(1.0, 0.5 * axis_sin.norm());
  return rad2deg(std::atan2(sin_angle, cos_angle));
}

double direction_angle(const Vec3& a, const Vec3& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw Error(ErrorKind::kDegenerateDirection, "direction has zero norm");
  }
  const Vec3 ua = a / na;
  const Vec3 ub = b / nb;
  // atan2 form of arccos(clamp(dot)); exact at 0 and 180 degrees.
  return rad2deg(std::atan2(ua.cross(ub).norm(), std::clamp(ua.dot(ub), -1.0, 1.0)));
}

Vec3 euler_angles_deg(const Rotation& r) {
  const Mat3& m = r.matrix();
  // R = Rz(yaw) * Ry(pitch) * Rx(roll)
  const double pitch = std::asin(std::clamp(-m(2, 0), -1.0, 1.0));
  const double roll = std::atan2(m(2, 1), m(2, 2));
  const double yaw = std::atan2(m(1, 0), m(0, 0));
  return {rad2deg(roll), rad2deg(pitch), rad2deg(yaw)};
}

PixelPoint project(const Intrinsics& intr, const Pose& pose, const Vec3& point) {
  intr.validate();
  const Vec3 xc = pose.apply(point);
  if (!(xc.z() > 0.0)) {
    throw Error(ErrorKind::kBehindCamera,
                "point depth " + std::to_string(xc.z()) + " is not in front of the camera");
  }
  return {intr.fx * xc.x() / xc.z() + intr.cx, intr.fy * xc.y() / xc.z() + intr.cy};
}

Vec3 back_project(const Intrinsics& intr, const Pose& pose, const PixelPoint& q,
                  double depth) {
  const Vec3 xc = intr.inverse() * q.homogeneous() * depth;
  return invert(pose).apply(xc);
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

}  // namespace acrkit
