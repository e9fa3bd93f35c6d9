#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "acrkit/error.hpp"
#include "acrkit/pose_estimation.hpp"

namespace acrkit {
namespace {

Mat3 hartley_normalizer(std::span<const PixelPoint> pts) {
  double cu = 0.0, cv = 0.0;
  for (const auto& p : pts) {
    cu += p.u;
    cv += p.v;
  }
  cu /= static_cast<double>(pts.size());
  cv /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += std::hypot(p.u - cu, p.v - cv);
  mean_dist /= static_cast<double>(pts.size());
  const double s = mean_dist > 0.0 ? std::sqrt(2.0) / mean_dist : 1.0;
  Mat3 t;
  t << s, 0.0, -s * cu, 0.0, s, -s * cv, 0.0, 0.0, 1.0;
  return t;
}

bool collinear(const PixelPoint& p, const PixelPoint& q, const PixelPoint& r) {
  const double cross = (q.u - p.u) * (r.v - p.v) - (q.v - p.v) * (r.u - p.u);
  return std::abs(cross) < 1e-6;
}

bool degenerate_sample(std::span<const PixelPoint> s) {
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      for (int k = j + 1; k < 4; ++k) {
        if (collinear(s[i], s[j], s[k])) return true;
      }
    }
  }
  return false;
}

// Fraction of points with (A m)_z > 0 decides the overall sign of A.
Mat3 orient_homography(const Mat3& a, const CorrespondenceSet& c, const Mat3& k_inv) {
  std::size_t positive = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if ((a * (k_inv * c.a[i].homogeneous())).z() > 0.0) ++positive;
  }
  return 2 * positive >= c.size() ? a : Mat3(-a);
}

double reprojection_residual(const Pose& pose, const Intrinsics& intr, const Vec3& ma,
                             const Vec3& mb, const PixelPoint& qa, const PixelPoint& qb) {
  const Vec2 z = triangulate_depths(pose, ma, mb);
  const Vec3 pa = z.x() * ma;
  const Vec3 pb = pose.rotation.inverse() * (z.y() * mb - pose.translation);
  const Vec3 x = 0.5 * (pa + pb);
  const Vec3 xb = pose.apply(x);
  const auto pix = [&](const Vec3& v) {
    return Vec2(intr.fx * v.x() / v.z() + intr.cx, intr.fy * v.y() / v.z() + intr.cy);
  };
  return (pix(x) - qa.vec()).squaredNorm() + (pix(xb) - qb.vec()).squaredNorm();
}

struct Candidate {
  Rotation rotation;
  Vec3 direction;
  Vec3 normal;
  double residual = 0.0;
};

}  // namespace

Homography::Homography(const Mat3& m) {
  if (!m.allFinite()) throw Error(ErrorKind::kDegenerateModel, "non-finite homography");
  Eigen::JacobiSVD<Mat3> svd(m);
  const Vec3 s = svd.singularValues();
  if (!(s(2) > 1e-12 * s(0))) throw Error(ErrorKind::kDegenerateModel, "singular homography");
  m_ = m / s(1);
}

PixelPoint Homography::transfer(const PixelPoint& q) const {
  const Vec3 p = m_ * q.homogeneous();
  return {p.x() / p.z(), p.y() / p.z()};
}

Mat3 fit_homography_dlt(std::span<const PixelPoint> a, std::span<const PixelPoint> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::kInvalidInput, "unequal point counts");
  if (a.size() < 4) throw Error(ErrorKind::kInsufficientData, "homography needs 4 pairs");
  const Mat3 ta = hartley_normalizer(a);
  const Mat3 tb = hartley_normalizer(b);
  const std::size_t n = a.size();
  Eigen::Matrix<double, Eigen::Dynamic, 9> m(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = ta * a[i].homogeneous();
    const Vec3 q = tb * b[i].homogeneous();
    const auto r = static_cast<Eigen::Index>(2 * i);
    m.row(r) << 0.0, 0.0, 0.0, -p.x(), -p.y(), -1.0, q.y() * p.x(), q.y() * p.y(), q.y();
    m.row(r + 1) << p.x(), p.y(), 1.0, 0.0, 0.0, 0.0, -q.x() * p.x(), -q.x() * p.y(), -q.x();
  }
  Eigen::Matrix<double, 9, 1> h;
  if (n == 4) {
    Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, 9>> svd(m, Eigen::ComputeFullV);
    h = svd.matrixV().col(8);
  } else {
    // Normal equations are well conditioned after Hartley normalization.
    const Eigen::Matrix<double, 9, 9> mtm = m.transpose() * m;
    Eigen::JacobiSVD<Eigen::Matrix<double, 9, 9>> svd(mtm, Eigen::ComputeFullV);
    h = svd.matrixV().col(8);
  }
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return tb.inverse() * hn * ta;
}

double symmetric_transfer_error(const Mat3& h, const Mat3& h_inv, const PixelPoint& qa,
                                const PixelPoint& qb) {
  const Vec3 p = h * qa.homogeneous();
  const Vec3 q = h_inv * qb.homogeneous();
  if (!(std::abs(p.z()) > 1e-12) || !(std::abs(q.z()) > 1e-12)) {
    return std::numeric_limits<double>::infinity();
  }
  const double du = p.x() / p.z() - qb.u, dv = p.y() / p.z() - qb.v;
  const double eu = q.x() / q.z() - qa.u, ev = q.y() / q.z() - qa.v;
  return du * du + dv * dv + eu * eu + ev * ev;
}

namespace {

std::size_t score(const Mat3& h, const CorrespondenceSet& c, double thr2,
                  std::vector<bool>* mask) {
  const Mat3 h_inv = h.inverse();
  if (!h_inv.allFinite()) return 0;
  std::size_t count = 0;
  if (mask) mask->assign(c.size(), false);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (symmetric_transfer_error(h, h_inv, c.a[i], c.b[i]) <= thr2) {
      ++count;
      if (mask) (*mask)[i] = true;
    }
  }
  return count;
}

Mat3 refit(const CorrespondenceSet& c, const std::vector<bool>& mask) {
  std::vector<PixelPoint> a, b;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (mask[i]) {
      a.push_back(c.a[i]);
      b.push_back(c.b[i]);
    }
  }
  return fit_homography_dlt(a, b);
}

}  // namespace

HomographyEstimate estimate_homography_ransac(const CorrespondenceSet& c,
                                              const Intrinsics& intr,
                                              const RansacOptions& opts) {
  intr.validate();
  c.validate();
  const std::size_t n = c.size();
  if (n < 4) throw Error(ErrorKind::kInsufficientData, "homography needs at least 4 pairs");
  // Sum of two squared distances, each allowed up to threshold.
  const double thr2 = 2.0 * opts.threshold_px * opts.threshold_px;

  std::mt19937_64 rng(opts.seed);
  std::vector<std::size_t> idx;
  std::array<PixelPoint, 4> sa, sb;
  std::size_t best_count = 0;
  Mat3 best_h = Mat3::Identity();
  std::size_t budget = std::max<std::size_t>(1, opts.max_iterations);
  for (std::size_t it = 0; it < budget; ++it) {
    sample_distinct(rng, n, 4, idx);
    for (int k = 0; k < 4; ++k) {
      sa[k] = c.a[idx[k]];
      sb[k] = c.b[idx[k]];
    }
    if (degenerate_sample(sa) || degenerate_sample(sb)) continue;
    const Mat3 h = fit_homography_dlt(sa, sb);
    if (!h.allFinite()) continue;
    const std::size_t count = score(h, c, thr2, nullptr);
    if (count > best_count) {
      best_count = count;
      best_h = h;
      budget = std::min(budget, adaptive_iterations(static_cast<double>(count) / n, 4,
                                                    opts.confidence, opts.max_iterations));
    }
  }
  if (best_count < 4) throw Error(ErrorKind::kDegenerateModel, "fewer than 4 inliers");

  HomographyEstimate out;
  score(best_h, c, thr2, &out.inlier_mask);
  Mat3 h = refit(c, out.inlier_mask);
  std::vector<bool> mask;
  const std::size_t count = score(h, c, thr2, &mask);
  if (count >= best_count) {
    out.inlier_mask = std::move(mask);
    h = refit(c, out.inlier_mask);
  }
  out.inlier_count = static_cast<std::size_t>(
      std::count(out.inlier_mask.begin(), out.inlier_mask.end(), true));
  out.homography = Homography(h);
  return out;
}

PoseHypothesis decompose_homography(const Homography& h, const Intrinsics& intr,
                                    const CorrespondenceSet& c,
                                    const DecompositionOptions& opts) {
  intr.validate();
  c.validate();
  if (c.empty()) throw Error(ErrorKind::kInsufficientData, "no correspondences to decompose");
  const Mat3 k_inv = intr.inverse();
  const Mat3 a = orient_homography(k_inv * h.matrix() * intr.matrix(), c, k_inv);

  std::vector<Vec3> ma(c.size()), mb(c.size());
  std::vector<std::size_t> all(c.size());
  Vec3 mean_ray = Vec3::Zero();
  for (std::size_t i = 0; i < c.size(); ++i) {
    ma[i] = k_inv * c.a[i].homogeneous();
    mb[i] = k_inv * c.b[i].homogeneous();
    all[i] = i;
    mean_ray += ma[i].normalized();
  }
  mean_ray.normalize();

  PoseHypothesis out;
  out.support = c.size();
  out.inliers = all;

  const Rotation r0 = Rotation::nearest(a);
  out.median_parallax_px = median_rotation_parallax(c, intr, r0, all);
  Eigen::JacobiSVD<Mat3> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 w = svd.singularValues();
  const double d1 = w(0), d2 = w(1), d3 = w(2);
  if (out.median_parallax_px < opts.min_parallax_px || (d1 - d3) <= 1e-12 * d2) {
    out.pose = DirectionalPose(r0, Vec3::UnitZ());
    out.zero_motion = true;
    return out;
  }

  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  const double s = u.determinant() * v.determinant();
  const double denom = d1 * d1 - d3 * d3;
  const double aux1 = std::sqrt(std::max(0.0, (d1 * d1 - d2 * d2) / denom));
  const double aux3 = std::sqrt(std::max(0.0, (d2 * d2 - d3 * d3) / denom));
  const double aux_st =
      std::sqrt(std::max(0.0, (d1 * d1 - d2 * d2) * (d2 * d2 - d3 * d3))) / ((d1 + d3) * d2);
  const double ct = (d2 * d2 + d1 * d3) / ((d1 + d3) * d2);
  const std::array<double, 4> x1{aux1, aux1, -aux1, -aux1};
  const std::array<double, 4> x3{aux3, -aux3, aux3, -aux3};
  const std::array<double, 4> st{aux_st, -aux_st, -aux_st, aux_st};

  std::vector<Candidate> passing;
  for (int i = 0; i < 4; ++i) {
    Mat3 rp;
    rp << ct, 0.0, -st[i], 0.0, 1.0, 0.0, st[i], 0.0, ct;
    const Mat3 r = s * u * rp * v.transpose();
    Vec3 n = v * Vec3(x1[i], 0.0, x3[i]);
    if (!r.allFinite() || !(n.norm() > 0.0)) continue;
    n.normalize();
    // Visible plane: n.m_a > 0 for the majority; then t follows from A/(s d2) = R + t n^T.
    std::size_t facing = 0;
    for (const auto& m : ma) facing += n.dot(m) > 0.0 ? 1 : 0;
    if (2 * facing < ma.size()) n = -n;
    const Vec3 t = (a / (s * d2) - r) * n;
    if (!(t.norm() > 0.0)) continue;
    const Mat3 g = r + t * n.transpose();
    bool ok = true;
    for (const auto& m : ma) {
      if (!(n.dot(m) > 0.0) || !((g * m).z() > 0.0)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    Candidate cand{Rotation::nearest(r), t.normalized(), n, 0.0};
    const Pose pose{cand.rotation, cand.direction};
    for (std::size_t j = 0; j < ma.size(); ++j) {
      cand.residual += reprojection_residual(pose, intr, ma[j], mb[j], c.a[j], c.b[j]);
    }
    cand.residual /= static_cast<double>(ma.size());
    // Symmetric formulas can repeat a solution; keep one copy.
    bool dup = false;
    for (const auto& p : passing) {
      if (rotation_angle(p.rotation * cand.rotation.inverse()) < 1e-9 &&
          p.direction.dot(cand.direction) > 1.0 - 1e-12) {
        dup = true;
      }
    }
    if (!dup) passing.push_back(cand);
  }
  if (passing.empty()) {
    throw Error(ErrorKind::kCheiralityFailure,
                "no homography decomposition puts every point in front of both views");
  }

  // Residuals within a factor of two are indistinguishable for the planar twin;
  // fall back to the normal most aligned with the viewing direction.
  const auto better = [&](const Candidate& x, const Candidate& y) {
    const double lo = std::min(x.residual, y.residual);
    const double hi = std::max(x.residual, y.residual);
    if (hi > 2.0 * lo + 1e-12) return x.residual < y.residual;
    return std::abs(x.normal.dot(mean_ray)) > std::abs(y.normal.dot(mean_ray));
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < passing.size(); ++i) {
    if (better(passing[i], passing[best])) best = i;
  }
  out.pose = DirectionalPose(passing[best].rotation, passing[best].direction);
  out.plane_normal = passing[best].normal;
  for (std::size_t i = 0; i < passing.size(); ++i) {
    if (i != best) {
      out.alternatives.push_back(
          {DirectionalPose(passing[i].rotation, passing[i].direction), passing[i].normal});
    }
  }
  return out;
}

}  // namespace acrkit
