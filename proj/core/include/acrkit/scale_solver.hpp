#pragma once

#include <Eigen/Core>
#include <map>
#include <span>
#include <vector>

#include "acrkit/correspondence.hpp"
#include "acrkit/geometry.hpp"

namespace acrkit {

inline constexpr std::size_t kMinScaleCorrespondences = 8;

/// Quadratic and bilinear forms of one correspondence under a directional pose.
///
/// With a = K^-1 q_a, b = R^-1 K^-1 q_b and c = R^-1 t:
/// alpha = a.a, beta = a.b, gamma = a.c, delta = b.b, epsilon = b.c, zeta = c.c.
struct CoefficientBlock {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  double epsilon = 0.0;
  double zeta = 0.0;

  /// The symmetric 3x3 block [[a,-b,g],[-b,d,-e],[g,-e,z]].
  Eigen::Matrix3d matrix() const;
};

/// Unit-norm minimizer y = [d_a1, d_b1, ..., d_aN, d_bN, s] of |A y|.
struct ScaleSolution {
  Eigen::VectorXd y;
  double residual = 0.0;
  /// Smallest and second-smallest singular values of A.
  double sigma_min = 0.0;
  double sigma_next = 0.0;

  std::size_t size() const { return y.size() > 0 ? static_cast<std::size_t>(y.size() - 1) / 2 : 0; }
  double s() const { return y(y.size() - 1); }
  double da(std::size_t i) const { return y(static_cast<Eigen::Index>(2 * i)); }
  double db(std::size_t i) const { return y(static_cast<Eigen::Index>(2 * i + 1)); }
};

/// Metric depths keyed by track id (or by correspondence index when no track
/// ids are available).
using SparseDepthMap = std::map<TrackId, double>;

CoefficientBlock coefficient_block(const PixelPoint& qa, const PixelPoint& qb,
                                   const Intrinsics& intr, const DirectionalPose& pose);

std::vector<CoefficientBlock> coefficient_blocks(const CorrespondenceSet& c,
                                                 const Intrinsics& intr,
                                                 const DirectionalPose& pose);

/// Dense 3N x (2N+1) system: row triple i holds block i in columns 2i, 2i+1
/// and the shared last column.
Eigen::MatrixXd assemble_system(std::span<const CoefficientBlock> blocks);

/// Half the squared distance between the two back-projections of every
/// correspondence, summed; A y is its gradient.
double objective(std::span<const CoefficientBlock> blocks, const Eigen::VectorXd& y);

/// Nullspace from the block structure. A^T A is an arrow matrix, so its
/// smallest eigenvalue is the first root of a scalar secular equation and the
/// eigenvector follows block by block in O(N).
///
/// Throws insufficient-data below kMinScaleCorrespondences blocks, ambiguous-nullspace when
/// the two smallest singular values are within 1e-8, and cheirality-failure
/// when any depth ratio is non-positive once s > 0.
ScaleSolution solve_nullspace(std::span<const CoefficientBlock> blocks);

/// Same contract for an assembled matrix. Matrices with the block layout of
/// assemble_system use the structured path; anything else goes through SVD.
ScaleSolution solve_nullspace(const Eigen::MatrixXd& a);

/// Reference implementation: right singular vector of the smallest singular
/// value from a full SVD.
ScaleSolution solve_nullspace_dense(const Eigen::MatrixXd& a);

/// Metric length of the known initialization translation. The estimated
/// direction is unit, so this is |t|; throws degenerate-init for zero motion.
double init_scale(const Vec3& executed_translation, const DirectionalPose& estimated);

/// Depths of image A of the initialization pair: d_a * s_init_m / s.
/// `keys` names each correspondence; empty means use the index.
SparseDepthMap depth_map_current(const ScaleSolution& sol, double s_init_m,
                                 std::span<const TrackId> keys = {});

/// Reference-image depths from a ref-to-current solution and current-image
/// depths: D_ref = D_cur * d_a / d_b. Throws missing-depth for unknown keys.
SparseDepthMap depth_map_reference(const ScaleSolution& ref_sol, const SparseDepthMap& d_cur,
                                   std::span<const TrackId> keys = {});

enum class ScaleAggregate { kMean, kMedian };

/// Metric translation scale of a ref-to-current solution from known reference
/// depths: aggregate of s * D_ref / d_a over shared keys. Throws missing-depth
/// when no key is shared.
double iteration_scale(const ScaleSolution& sol, const SparseDepthMap& d_ref,
                       std::span<const TrackId> keys = {},
                       ScaleAggregate aggregate = ScaleAggregate::kMean);

}  // namespace acrkit
