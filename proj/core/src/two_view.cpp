#include <algorithm>
#include <cmath>
#include <limits>

#include "acrkit/error.hpp"
#include "acrkit/pose_estimation.hpp"

namespace acrkit {

double point_spread(std::span<const PixelPoint> points, ImageSize image) {
  if (points.empty()) throw Error(ErrorKind::kInsufficientData, "no points for spread");
  if (image.width <= 0 || image.height <= 0) {
    throw Error(ErrorKind::kInvalidInput, "image size must be positive");
  }
  double u0 = points[0].u, u1 = points[0].u, v0 = points[0].v, v1 = points[0].v;
  for (const auto& p : points) {
    u0 = std::min(u0, p.u);
    u1 = std::max(u1, p.u);
    v0 = std::min(v0, p.v);
    v1 = std::max(v1, p.v);
  }
  const double area = (u1 - u0) * (v1 - v0);
  const double frac = area / (static_cast<double>(image.width) * image.height);
  return std::clamp(frac, 0.0, 1.0);
}

double median_rotation_parallax(const CorrespondenceSet& c, const Intrinsics& intr,
                                const Rotation& r, std::span<const std::size_t> indices) {
  if (indices.empty()) return 0.0;
  const Mat3 h = intr.matrix() * r.matrix() * intr.inverse();
  std::vector<double> d;
  d.reserve(indices.size());
  for (std::size_t i : indices) {
    const Vec3 p = h * c.a[i].homogeneous();
    if (!(std::abs(p.z()) > 1e-12)) {
      d.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    d.push_back(std::hypot(p.x() / p.z() - c.b[i].u, p.y() / p.z() - c.b[i].v));
  }
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

Vec2 triangulate_depths(const Pose& pose, const Vec3& ma, const Vec3& mb) {
  // z_b m_b = z_a R m_a + t, least squares in (z_a, z_b).
  Eigen::Matrix<double, 3, 2> a;
  a.col(0) = pose.rotation * ma;
  a.col(1) = -mb;
  const Eigen::Matrix2d ata = a.transpose() * a;
  const double det = ata.determinant();
  if (!(std::abs(det) > 1e-15)) return {0.0, 0.0};
  return ata.inverse() * (a.transpose() * -pose.translation);
}

}  // namespace acrkit
