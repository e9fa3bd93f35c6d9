#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <utility>
#include <vector>

#include "acrkit/correspondence.hpp"
#include "acrkit/plane_map.hpp"

namespace acrkit {

/// Complete graph over the planes of one map; edge weight is the minimum
/// inter-region pixel distance.
struct PlaneGraph {
  int plane_count = 0;
  Eigen::MatrixXd distance;  // plane_count x plane_count, zero diagonal
};

PlaneGraph build_plane_graph(const PlaneSegmentMap& map);

/// Correspondences whose reference point lies in plane a of m_ref and whose
/// current point lies in plane c of m_cur.
std::size_t node_affinity(const CorrespondenceSet& c, const PlaneSegmentMap& m_ref,
                          const PlaneSegmentMap& m_cur, int a, int c_id);

/// All node affinities at once, H x M (0-based rows/cols for ids 1..).
Eigen::MatrixXd node_affinities(const CorrespondenceSet& c, const PlaneSegmentMap& m_ref,
                                const PlaneSegmentMap& m_cur);

/// exp(-|d_ref - d_cur| / sigma).
double edge_affinity(double d_ref, double d_cur, double sigma);

/// Index of the pair (a, c) in the column expansion of an H x M assignment.
inline Eigen::Index pair_index(int a, int c, int h) { return a + static_cast<Eigen::Index>(c) * h; }

/// MH x MH affinity: node terms on the diagonal, edge terms between (a,c) and
/// (b,d) for a != b and c != d. With `normalize`, each class is divided by
/// its maximum. Throws orientation when H > M.
Eigen::MatrixXd assemble_affinity(const Eigen::MatrixXd& nodes, const PlaneGraph& g_ref,
                                  const PlaneGraph& g_cur, double sigma, bool normalize = true);

/// Injective map from the H reference planes to the M current planes.
struct Assignment {
  int h = 0;
  int m = 0;
  std::vector<int> column;  // column[a] = matched current plane (0-based)

  Eigen::MatrixXi matrix() const;
  /// Column expansion of matrix().
  Eigen::VectorXd expanded() const;
  /// Throws invalid-input unless rows sum to 1 and columns to at most 1.
  void validate() const;
};

/// U_c^T W U_c.
double matching_objective(const Eigen::MatrixXd& w, const Assignment& u);

enum class MatchMode { kExact, kSpectral };

/// Exact mode enumerates all M!/(M-H)! injections (budget-exceeded when the
/// count exceeds `exact_budget`) and keeps the first maximizer in lexicographic
/// order. Spectral mode discretizes the leading eigenvector of W greedily.
Assignment solve_matching(const Eigen::MatrixXd& w, int h, int m, MatchMode mode,
                          std::size_t exact_budget = 1'000'000);

/// Number of injections from h items into m.
double injection_count(int h, int m);

struct MatchOptions {
  /// Edge kernel width in pixels; <= 0 selects 10% of the image diagonal.
  double sigma_px = 0.0;
  bool normalize_terms = true;
  std::size_t exact_budget = 1'000'000;
  /// Use exact enumeration when within budget, spectral otherwise.
  bool prefer_exact = true;
};

struct PlaneMatch {
  int ref_id = 0;  // 1-based plane ids
  int cur_id = 0;
  std::size_t shared = 0;
};

struct PlaneMatchResult {
  std::vector<PlaneMatch> pairs;
  double objective = 0.0;
  bool exact = true;
  /// Inputs were swapped because the reference had more planes.
  bool transposed = false;
};

/// Graph-matches the planes of two maps (already eroded by the caller).
PlaneMatchResult match_planes(const CorrespondenceSet& c, const PlaneSegmentMap& m_ref,
                              const PlaneSegmentMap& m_cur, const MatchOptions& opts = {});

}  // namespace acrkit
