#pragma once

#include <optional>
#include <span>

#include "acrkit/geometry.hpp"

namespace acrkit {

struct AfdReport {
  double afd = 0.0;
  std::size_t match_count = 0;
};

/// Average feature-point displacement: mean Euclidean distance between
/// paired points. Throws invalid-input for empty or unequal lists.
AfdReport afd(std::span<const PixelPoint> ref_points, std::span<const PixelPoint> cur_points);

struct PoseError {
  double rotation_deg = 0.0;
  /// Empty when the true translation is zero.
  std::optional<double> direction_deg;
};

/// Rotation error is the angle of R_est R_true^T; direction error is the angle
/// to the normalized true translation.
PoseError pose_error(const DirectionalPose& est, const Pose& truth);

/// Per-axis (roll, pitch, yaw) magnitude of R_est R_true^T in degrees.
Vec3 euler_error_deg(const Rotation& est, const Rotation& truth);

}  // namespace acrkit
