#include "acrkit/metrics.hpp"

#include <cmath>

#include "acrkit/error.hpp"

namespace acrkit {

AfdReport afd(std::span<const PixelPoint> ref_points, std::span<const PixelPoint> cur_points) {
  if (ref_points.empty() || ref_points.size() != cur_points.size()) {
    throw Error(ErrorKind::kInvalidInput, "AFD needs two equal, nonempty point lists");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < ref_points.size(); ++i) {
    sum += std::hypot(ref_points[i].u - cur_points[i].u, ref_points[i].v - cur_points[i].v);
  }
  return {sum / static_cast<double>(ref_points.size()), ref_points.size()};
}

PoseError pose_error(const DirectionalPose& est, const Pose& truth) {
  PoseError e;
  e.rotation_deg = rotation_angle(est.rotation() * truth.rotation.inverse());
  if (truth.translation.norm() > 0.0) {
    e.direction_deg = direction_angle(est.direction(), truth.translation);
  }
  return e;
}

Vec3 euler_error_deg(const Rotation& est, const Rotation& truth) {
  return euler_angles_deg(est * truth.inverse()).cwiseAbs();
}

}  // namespace acrkit
