#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "acrkit/error.hpp"
#include "acrkit/pose_estimation.hpp"

namespace acrkit {
namespace {

struct Normalized {
  std::vector<Vec3> a;
  std::vector<Vec3> b;
};

Normalized normalize(const CorrespondenceSet& c, const Mat3& k_inv) {
  Normalized n;
  n.a.reserve(c.size());
  n.b.reserve(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    n.a.push_back(k_inv * c.a[i].homogeneous());
    n.b.push_back(k_inv * c.b[i].homogeneous());
  }
  return n;
}

std::size_t count_inliers(const Mat3& f, const CorrespondenceSet& c, double thr2,
                          std::vector<std::size_t>* inliers) {
  std::size_t count = 0;
  if (inliers) inliers->clear();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (sampson_error(f, c.a[i], c.b[i]) <= thr2) {
      ++count;
      if (inliers) inliers->push_back(i);
    }
  }
  return count;
}

std::size_t cheirality_votes(const Pose& pose, const Normalized& n,
                             std::span<const std::size_t> idx) {
  std::size_t votes = 0;
  for (std::size_t i : idx) {
    const Vec2 z = triangulate_depths(pose, n.a[i], n.b[i]);
    if (z.x() > 0.0 && z.y() > 0.0) ++votes;
  }
  return votes;
}

double median_raw_parallax(const CorrespondenceSet& c) {
  std::vector<double> d(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    d[i] = std::hypot(c.b[i].u - c.a[i].u, c.b[i].v - c.a[i].v);
  }
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

}  // namespace

PoseHypothesis estimate_epipolar(const CorrespondenceSet& c, const Intrinsics& intr,
                                 const EpipolarOptions& opts) {
  intr.validate();
  c.validate();
  if (c.size() < 8) throw Error(ErrorKind::kInsufficientData, "epipolar path needs 8 pairs");
  const Mat3 k_inv = intr.inverse();
  const Normalized nrm = normalize(c, k_inv);
  const double thr2 = opts.ransac.threshold_px * opts.ransac.threshold_px;

  // A pure rotation is explained by the infinite homography; the essential
  // matrix is then undefined.
  std::size_t h_inliers = 0;
  std::optional<Rotation> h_rotation;
  std::vector<std::size_t> h_idx;
  try {
    const HomographyEstimate h = estimate_homography_ransac(c, intr, opts.ransac);
    h_inliers = h.inlier_count;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (h.inlier_mask[i]) h_idx.push_back(i);
    }
    Mat3 a = k_inv * h.homography.matrix() * intr.matrix();
    if (a.determinant() < 0.0) a = -a;
    h_rotation = Rotation::nearest(a);
    const double par = median_rotation_parallax(c, intr, *h_rotation, h_idx);
    if (par < opts.min_parallax_px) {
      PoseHypothesis out;
      out.pose = DirectionalPose(*h_rotation, Vec3::UnitZ());
      out.zero_motion = true;
      out.support = h_inliers;
      out.inliers = h_idx;
      out.median_parallax_px = par;
      return out;
    }
  } catch (const Error&) {
  }

  const bool five = opts.solver == EpipolarSolver::kFivePoint;
  const std::size_t sample_size = five ? 5 : 8;
  std::mt19937_64 rng(mix_seed(opts.ransac.seed, 1));
  std::vector<std::size_t> idx;
  std::vector<Vec3> sa(sample_size), sb(sample_size);
  const Mat3 k_inv_t = k_inv.transpose();
  std::size_t best_count = 0;
  Mat3 best_e = Mat3::Zero();
  std::size_t budget = std::max<std::size_t>(1, opts.ransac.max_iterations);
  for (std::size_t it = 0; it < budget; ++it) {
    sample_distinct(rng, c.size(), sample_size, idx);
    for (std::size_t k = 0; k < sample_size; ++k) {
      sa[k] = nrm.a[idx[k]];
      sb[k] = nrm.b[idx[k]];
    }
    std::vector<Mat3> models;
    if (five) {
      models = essential_five_point(sa, sb);
    } else {
      models.push_back(essential_eight_point(sa, sb));
    }
    for (const Mat3& e : models) {
      if (!e.allFinite()) continue;
      const std::size_t count = count_inliers(k_inv_t * e * k_inv, c, thr2, nullptr);
      if (count > best_count) {
        best_count = count;
        best_e = e;
        budget = std::min(budget,
                          adaptive_iterations(static_cast<double>(count) / c.size(),
                                              sample_size, opts.ransac.confidence,
                                              opts.ransac.max_iterations));
      }
    }
  }
  if (best_count < sample_size) {
    throw Error(ErrorKind::kDegenerateModel, "no essential matrix with enough support");
  }

  std::vector<std::size_t> inliers;
  count_inliers(k_inv_t * best_e * k_inv, c, thr2, &inliers);
  if (!five) {
    std::vector<Vec3> ia, ib;
    for (std::size_t i : inliers) {
      ia.push_back(nrm.a[i]);
      ib.push_back(nrm.b[i]);
    }
    const Mat3 e = essential_eight_point(ia, ib);
    std::vector<std::size_t> refit;
    if (count_inliers(k_inv_t * e * k_inv, c, thr2, &refit) >= inliers.size()) {
      best_e = e;
      inliers = std::move(refit);
    }
  }

  const std::vector<Pose> cands = decompose_essential(best_e);
  std::size_t best = 0, best_votes = 0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const std::size_t v = cheirality_votes(cands[i], nrm, inliers);
    if (v > best_votes) {
      best_votes = v;
      best = i;
    }
  }
  PoseHypothesis out;
  out.pose = DirectionalPose(cands[best].rotation, cands[best].translation);
  out.support = inliers.size();
  out.median_parallax_px = median_rotation_parallax(c, intr, out.pose.rotation(), inliers);
  out.zero_motion = out.median_parallax_px < opts.min_parallax_px;
  out.planar_degeneracy = h_inliers * 10 >= inliers.size() * 9;
  out.inliers = std::move(inliers);
  return out;
}

PoseHypothesis estimate_translation_direction(const CorrespondenceSet& c,
                                              const Intrinsics& intr,
                                              const RansacOptions& opts,
                                              double min_parallax_px) {
  intr.validate();
  c.validate();
  if (c.size() < 2) throw Error(ErrorKind::kInsufficientData, "direction needs 2 pairs");
  PoseHypothesis out;
  if (median_raw_parallax(c) < min_parallax_px) {
    out.zero_motion = true;
    out.support = c.size();
    out.median_parallax_px = median_raw_parallax(c);
    for (std::size_t i = 0; i < c.size(); ++i) out.inliers.push_back(i);
    return out;
  }
  const Mat3 k_inv = intr.inverse();
  const Normalized nrm = normalize(c, k_inv);
  std::vector<Vec3> rows(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) rows[i] = nrm.a[i].cross(nrm.b[i]);

  const double thr2 = opts.threshold_px * opts.threshold_px;
  const Mat3 k_inv_t = k_inv.transpose();
  std::mt19937_64 rng(mix_seed(opts.seed, 2));
  std::vector<std::size_t> idx;
  std::size_t best_count = 0;
  Vec3 best_t = Vec3::Zero();
  std::size_t budget = std::max<std::size_t>(1, opts.max_iterations);
  for (std::size_t it = 0; it < budget; ++it) {
    sample_distinct(rng, c.size(), 2, idx);
    const Vec3 t = rows[idx[0]].cross(rows[idx[1]]);
    if (!(t.norm() > 1e-15)) continue;
    const std::size_t count = count_inliers(k_inv_t * skew(t) * k_inv, c, thr2, nullptr);
    if (count > best_count) {
      best_count = count;
      best_t = t;
      budget = std::min(budget, adaptive_iterations(static_cast<double>(count) / c.size(), 2,
                                                    opts.confidence, opts.max_iterations));
    }
  }
  if (best_count < 2) throw Error(ErrorKind::kDegenerateModel, "no translation with support");

  std::vector<std::size_t> inliers;
  count_inliers(k_inv_t * skew(best_t) * k_inv, c, thr2, &inliers);
  Eigen::MatrixX3d m(static_cast<Eigen::Index>(inliers.size()), 3);
  for (std::size_t k = 0; k < inliers.size(); ++k) {
    m.row(static_cast<Eigen::Index>(k)) = rows[inliers[k]].transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixX3d> svd(m, Eigen::ComputeFullV);
  Vec3 t = svd.matrixV().col(2);
  const Pose pos{Rotation(), t};
  const Pose neg{Rotation(), -t};
  if (cheirality_votes(neg, nrm, inliers) > cheirality_votes(pos, nrm, inliers)) t = -t;

  out.pose = DirectionalPose(Rotation(), t);
  out.support = inliers.size();
  out.median_parallax_px = median_rotation_parallax(c, intr, Rotation(), inliers);
  out.inliers = std::move(inliers);
  return out;
}

}  // namespace acrkit
