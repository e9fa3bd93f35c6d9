#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "acrkit/correspondence.hpp"
#include "acrkit/fusion.hpp"
#include "acrkit/geometry.hpp"
#include "acrkit/metrics.hpp"
#include "acrkit/plane_map.hpp"
#include "acrkit/pose_estimation.hpp"

namespace acrkit {

/// What the camera sees at its current pose.
struct Observation {
  /// a = reference image, b = current image; track ids are set.
  CorrespondenceSet matches;
  /// Plane mask of the current image.
  PlaneSegmentMap mask;
  /// Keypoints of the current image, matched to other images captured under
  /// the same conditions by track id.
  std::vector<PixelPoint> keypoints;
  std::vector<TrackId> keypoint_tracks;
};

/// The hardware seam: a robot hand carrying the camera.
class MotionExecutor {
 public:
  virtual ~MotionExecutor() = default;

  virtual const Intrinsics& intrinsics() const = 0;
  virtual const PlaneSegmentMap& reference_mask() const = 0;
  /// Capture at the current pose without moving.
  virtual Observation observe() = 0;
  /// Move the hand by `hand_motion` relative to its current pose, then capture.
  virtual Observation execute(const Pose& hand_motion) = 0;

  /// Ground truth, when the executor knows it: the current camera pose
  /// relative to the reference camera.
  virtual std::optional<Pose> residual() const { return std::nullopt; }
  virtual std::optional<AfdReport> residual_afd() const { return std::nullopt; }
};

struct AcrConfig {
  double scale_epsilon_m = 1e-3;
  double rotation_epsilon_deg = 0.02;
  std::size_t max_iterations = 30;
  Vec3 init_translation{0.0, 0.0, 0.05};
  I2peConfig i2pe;
  EpipolarOptions epipolar;
  std::uint64_t seed = 0;

  /// Throws config unless epsilons are positive, max_iterations >= 1 and
  /// init_translation is nonzero.
  void validate() const;
};

enum class AcrStatus { kInit, kMoving, kConverged, kExhausted, kFailed };

std::string_view acr_status_name(AcrStatus s);

struct AcrRecord {
  std::size_t iter = 0;  // 0 is the initialization step
  AcrStatus status = AcrStatus::kMoving;
  DirectionalPose estimate;
  bool zero_motion = false;
  double scale_m = 0.0;
  Pose command;
  /// Ground truth at the time of the estimate; NaN when unknown.
  double rot_err_deg = 0.0;
  double trans_err_m = 0.0;
};

struct AcrTrace {
  std::vector<AcrRecord> records;
  AcrStatus status = AcrStatus::kExhausted;
  /// Hand motions commanded after initialization.
  std::size_t iterations = 0;
  std::string failure;
  std::optional<double> final_rot_err_deg;
  std::optional<double> final_trans_err_m;
  std::optional<double> final_afd_px;

  bool converged() const { return status == AcrStatus::kConverged; }
};

/// Hand motion that undoes `est` at metric scale `scale`, assuming an
/// identity hand-eye transform: R_B = R^-1, t_B = -R^-1 (scale * direction).
Pose hand_motion_from_estimate(const DirectionalPose& est, double scale);

/// Plane-mediated relocalization with computed scale.
AcrTrace run_acr(MotionExecutor& executor, const AcrConfig& cfg = {});

/// Prior strategy: unrestricted epipolar estimates, translation step guessed
/// and halved whenever the estimated direction reverses.
AcrTrace run_bisection_baseline(MotionExecutor& executor, const AcrConfig& cfg = {});

/// One JSON object per record: {iter, S_i_m, rot_err_deg, trans_err_m, status}.
void write_trace_jsonl(const AcrTrace& trace, std::ostream& out);

}  // namespace acrkit
