#pragma once

#include <span>
#include <vector>

#include "acrkit/correspondence.hpp"
#include "acrkit/plane_map.hpp"
#include "acrkit/plane_match.hpp"
#include "acrkit/pose_estimation.hpp"

namespace acrkit {

/// Unnormalized reliability: support x spread.
double hypothesis_weight(const PoseHypothesis& h);

/// Nonnegative weights summing to 1.
struct FusionWeights {
  std::vector<double> w;

  /// Normalizes `raw`; an all-zero input becomes uniform. Throws invalid-input
  /// for negative or non-finite entries.
  static FusionWeights from_raw(std::vector<double> raw);
};

FusionWeights fusion_weights(std::span<const PoseHypothesis> hypotheses);

enum class FusionMode { kWeightedMean, kWinnerTakeAll };

/// Weighted quaternion (chordal L2) mean of the rotations and the normalized
/// weighted sum of directions, hemisphere-aligned to the heaviest hypothesis.
/// Zero-motion hypotheses contribute rotation only. Throws insufficient-data
/// for no hypotheses and ambiguous-direction when the directions cancel.
DirectionalPose fuse_poses(std::span<const PoseHypothesis> hypotheses,
                           const FusionWeights& weights,
                           FusionMode mode = FusionMode::kWeightedMean);

/// Weighted mean rotation alone (quaternion eigenvector method).
Rotation mean_rotation(std::span<const Rotation> rotations, std::span<const double> weights);

struct I2peConfig {
  int erosion_radius = 5;
  MatchOptions match;
  RansacOptions ransac;
  DecompositionOptions decomposition;
  std::size_t min_pair_support = 4;
  FusionMode fusion = FusionMode::kWeightedMean;
  /// Pick, per plane, between cheirality-consistent twin decompositions by
  /// agreement with the other planes.
  bool resolve_twins = true;
};

struct I2peResult {
  DirectionalPose pose;
  /// Most of the fused weight reports a zero baseline.
  bool zero_motion = false;
  std::vector<PoseHypothesis> hypotheses;  // inliers index the input set
  FusionWeights weights;
  PlaneMatchResult matching;
  /// Union of the per-plane homography inliers, sorted.
  std::vector<std::size_t> inliers;
};

/// Plane-mediated pose estimation between a reference (A) and current (B)
/// image: erode masks, match planes, fit and decompose one homography per
/// matched plane pair, then fuse. Correspondences outside matched plane pairs
/// are never read. Throws estimation-failure when no pair yields a pose.
I2peResult i2pe(const CorrespondenceSet& c, const PlaneSegmentMap& m_ref,
                const PlaneSegmentMap& m_cur, const Intrinsics& intr,
                const I2peConfig& cfg = {});

}  // namespace acrkit
