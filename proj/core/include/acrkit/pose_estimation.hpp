#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "acrkit/correspondence.hpp"
#include "acrkit/geometry.hpp"
#include "acrkit/ransac.hpp"

namespace acrkit {

struct ImageSize {
  int width = 0;
  int height = 0;
};

/// Plane-induced homography in pixel coordinates, q_b ~ H q_a. Normalized so
/// that its middle singular value is 1.
class Homography {
 public:
  Homography() : m_(Mat3::Identity()) {}
  /// Normalizes `m`; throws degenerate-model when `m` is singular.
  explicit Homography(const Mat3& m);

  const Mat3& matrix() const { return m_; }
  PixelPoint transfer(const PixelPoint& q) const;

 private:
  Mat3 m_;
};

struct HomographyEstimate {
  Homography homography;
  std::vector<bool> inlier_mask;
  std::size_t inlier_count = 0;
};

/// One physically admissible decomposition of a relative pose.
struct PoseCandidate {
  DirectionalPose pose;
  Vec3 plane_normal = Vec3::UnitZ();
};

/// A relative-pose estimate from one correspondence set.
///
/// The pose maps image-A camera coordinates to image-B camera coordinates:
/// X_b = R X_a + S * direction.
struct PoseHypothesis {
  DirectionalPose pose;
  Vec3 plane_normal = Vec3::UnitZ();
  std::size_t support = 0;
  double spread = 0.0;
  /// Zero baseline (pure rotation): direction is undefined and only a
  /// placeholder. The epipolar path reports its unstable-translation flag here.
  bool zero_motion = false;
  /// Epipolar path only: a single homography explains the inlier set.
  bool planar_degeneracy = false;
  double median_parallax_px = 0.0;
  /// Other decompositions that also pass the cheirality test (the planar
  /// twin). Callers with extra views or planes can use them to disambiguate.
  std::vector<PoseCandidate> alternatives;
  /// Indices into the correspondence set the hypothesis was estimated from.
  std::vector<std::size_t> inliers;
};

/// Hartley-normalized DLT over all given pairs (n >= 4).
Mat3 fit_homography_dlt(std::span<const PixelPoint> a, std::span<const PixelPoint> b);

/// d(q_b, H q_a)^2 + d(q_a, H^-1 q_b)^2 in squared pixels.
double symmetric_transfer_error(const Mat3& h, const Mat3& h_inv, const PixelPoint& qa,
                                const PixelPoint& qb);

/// RANSAC over 4-point samples with a symmetric transfer error threshold and a
/// final normalized-DLT refit on all inliers. Deterministic for a given seed.
HomographyEstimate estimate_homography_ransac(const CorrespondenceSet& c,
                                              const Intrinsics& intr,
                                              const RansacOptions& opts);

struct DecompositionOptions {
  /// Median rotation-compensated parallax below which the motion is treated
  /// as a pure rotation.
  double min_parallax_px = 0.5;
};

/// Analytic (Faugeras) decomposition of a homography estimated from a planar
/// correspondence set. Candidates are filtered by positive depth of every
/// point in both views. Throws cheirality-failure when none survives.
PoseHypothesis decompose_homography(const Homography& h, const Intrinsics& intr,
                                    const CorrespondenceSet& c,
                                    const DecompositionOptions& opts = {});

enum class EpipolarSolver { kFivePoint, kEightPoint };

struct EpipolarOptions {
  RansacOptions ransac;
  EpipolarSolver solver = EpipolarSolver::kFivePoint;
  double min_parallax_px = 0.5;
};

/// Essential-matrix solutions for five normalized (K^-1 q) correspondences.
std::vector<Mat3> essential_five_point(std::span<const Vec3> ma, std::span<const Vec3> mb);

/// Normalized eight-point essential matrix for n >= 8 normalized pairs,
/// projected onto the essential manifold.
Mat3 essential_eight_point(std::span<const Vec3> ma, std::span<const Vec3> mb);

/// The four (R, t) factorizations of an essential matrix.
std::vector<Pose> decompose_essential(const Mat3& e);

/// Squared Sampson distance in pixels for fundamental matrix f.
double sampson_error(const Mat3& f, const PixelPoint& qa, const PixelPoint& qb);

/// Epipolar-geometry baseline: essential matrix inside RANSAC, factorized and
/// disambiguated by a cheirality vote.
PoseHypothesis estimate_epipolar(const CorrespondenceSet& c, const Intrinsics& intr,
                                 const EpipolarOptions& opts = {});

/// Translation direction for a motion with known identity rotation (the
/// initialization translation). Two-point RANSAC on the epipolar constraint
/// (m_a x m_b) . t = 0, refit by SVD on all inliers.
PoseHypothesis estimate_translation_direction(const CorrespondenceSet& c,
                                              const Intrinsics& intr,
                                              const RansacOptions& opts = {},
                                              double min_parallax_px = 0.5);

/// Area of the axis-aligned bounding box of `points` over the image area.
double point_spread(std::span<const PixelPoint> points, ImageSize image);

/// Median of |q_b - K R K^-1 q_a| over the given indices.
double median_rotation_parallax(const CorrespondenceSet& c, const Intrinsics& intr,
                                const Rotation& r, std::span<const std::size_t> indices);

/// Depths (z_a, z_b) of the midpoint triangulation of a normalized pair under
/// X_b = R X_a + t.
Vec2 triangulate_depths(const Pose& pose, const Vec3& ma, const Vec3& mb);

}  // namespace acrkit
