#include "acrkit/scale_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "acrkit/error.hpp"

namespace acrkit {
namespace {

constexpr double kAmbiguityGap = 1e-8;
// Below this, a block's own least-squares problem is rank deficient and the
// secular form is unreliable; the dense route decides instead.
constexpr double kBlockRankFloor = 1e-7;

struct BlockSvd {
  Eigen::Matrix<double, 3, 2> p;
  Eigen::Vector3d r;
  Eigen::Matrix2d w;   // right singular vectors of p
  Eigen::Vector2d mu;  // squared singular values of p
  Eigen::Vector2d w0;  // W^T u0 with u0 = -p^+ r
  double res0 = 0.0;   // |p u0 + r|^2
};

BlockSvd analyse(const Eigen::Matrix3d& g) {
  BlockSvd b;
  b.p = g.leftCols<2>();
  b.r = g.col(2);
  Eigen::JacobiSVD<Eigen::Matrix<double, 3, 2>> svd(b.p, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector2d sv = svd.singularValues();
  b.w = svd.matrixV();
  b.mu = sv.cwiseProduct(sv);
  const Eigen::Vector3d ur = svd.matrixU().transpose() * b.r;
  for (int k = 0; k < 2; ++k) b.w0(k) = sv(k) > 0.0 ? -ur(k) / sv(k) : 0.0;
  // Residual is the component of r orthogonal to range(p).
  b.res0 = ur(2) * ur(2);
  return b;
}

struct Secular {
  double f0 = 0.0;
  double u0_sq = 0.0;
  const std::vector<BlockSvd>* blocks = nullptr;

  // f(l) = f0 - l (1 + sum |u0|^2) - l^2 sum u0^T (B - l)^-1 u0
  void eval(double l, double& f, double& df) const {
    double q1 = 0.0, q2 = 0.0;
    for (const auto& b : *blocks) {
      for (int k = 0; k < 2; ++k) {
        const double inv = 1.0 / (b.mu(k) - l);
        const double w2 = b.w0(k) * b.w0(k);
        q1 += w2 * inv;
        q2 += w2 * inv * inv;
      }
    }
    f = f0 - l * (1.0 + u0_sq) - l * l * q1;
    df = -(1.0 + u0_sq) - 2.0 * l * q1 - l * l * q2;
  }
};

double smallest_root(const Secular& sec, double hi) {
  if (!(sec.f0 > 0.0)) return 0.0;
  double lo = 0.0;
  double l = 0.0;
  for (int it = 0; it < 200; ++it) {
    double f, df;
    sec.eval(l, f, df);
    if (f > 0.0) {
      lo = l;
    } else {
      hi = l;
    }
    double next = l - f / df;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - l) <= 1e-15 * std::max(next, 1e-300) || hi - lo <= 1e-16 * hi) {
      return next;
    }
    l = next;
  }
  return l;
}

// Root of the secular function between the two smallest block eigenvalues.
double second_root(const Secular& sec, double lo, double hi) {
  if (!(hi > lo)) return lo;
  double a = lo + 1e-15 * std::max(1.0, lo), b = hi - 1e-15 * std::max(1.0, hi);
  double fa, fb, d;
  sec.eval(a, fa, d);
  sec.eval(b, fb, d);
  if (!(fa > 0.0) || !(fb < 0.0)) return lo;
  for (int it = 0; it < 200 && b - a > 1e-16 * b; ++it) {
    const double m = 0.5 * (a + b);
    double fm;
    sec.eval(m, fm, d);
    (fm > 0.0 ? a : b) = m;
  }
  return 0.5 * (a + b);
}

void finish(ScaleSolution& sol) {
  if (sol.s() < 0.0) sol.y = -sol.y;
  if (!(std::abs(sol.sigma_next - sol.sigma_min) > kAmbiguityGap)) {
    throw Error(ErrorKind::kAmbiguousNullspace,
                "two smallest singular values coincide; depth and scale are not observable");
  }
  const std::size_t n = sol.size();
  for (std::size_t i = 0; i < 2 * n; ++i) {
    if (!(sol.y(static_cast<Eigen::Index>(i)) > 0.0)) {
      throw Error(ErrorKind::kCheiralityFailure,
                  "non-positive depth ratio at entry " + std::to_string(i));
    }
  }
}

double block_residual_sq(const std::vector<Eigen::Matrix3d>& g, const Eigen::VectorXd& y) {
  const double s = y(y.size() - 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Eigen::Vector3d yi(y(static_cast<Eigen::Index>(2 * i)),
                             y(static_cast<Eigen::Index>(2 * i + 1)), s);
    acc += (g[i] * yi).squaredNorm();
  }
  return acc;
}

Eigen::MatrixXd assemble(const std::vector<Eigen::Matrix3d>& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3 * n, 2 * n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    a.block<3, 2>(3 * i, 2 * i) = g[static_cast<std::size_t>(i)].leftCols<2>();
    a.block<3, 1>(3 * i, 2 * n) = g[static_cast<std::size_t>(i)].col(2);
  }
  return a;
}

ScaleSolution solve_structured(const std::vector<Eigen::Matrix3d>& g) {
  if (g.size() < kMinScaleCorrespondences) {
    throw Error(ErrorKind::kInsufficientData,
                "scale solving needs at least " + std::to_string(kMinScaleCorrespondences) +
                    " correspondences, got " + std::to_string(g.size()));
  }
  std::vector<BlockSvd> blocks;
  blocks.reserve(g.size());
  Secular sec;
  double mu_a = std::numeric_limits<double>::infinity();
  double mu_b = std::numeric_limits<double>::infinity();
  for (const auto& gi : g) {
    blocks.push_back(analyse(gi));
    const BlockSvd& b = blocks.back();
    sec.f0 += b.res0;
    sec.u0_sq += b.w0.squaredNorm();
    for (int k = 0; k < 2; ++k) {
      const double m = b.mu(k);
      if (m < mu_a) {
        mu_b = mu_a;
        mu_a = m;
      } else if (m < mu_b) {
        mu_b = m;
      }
    }
  }
  if (!(std::sqrt(mu_a) > kBlockRankFloor)) return solve_nullspace_dense(assemble(g));
  sec.blocks = &blocks;

  const double l1 = smallest_root(sec, mu_a);
  ScaleSolution sol;
  sol.sigma_min = std::sqrt(std::max(0.0, l1));
  // Interlacing puts the second eigenvalue in [mu_a, mu_b].
  sol.sigma_next = std::sqrt(second_root(sec, mu_a, mu_b));

  const auto n = static_cast<Eigen::Index>(g.size());
  sol.y.resize(2 * n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const BlockSvd& b = blocks[static_cast<std::size_t>(i)];
    // u = (B - l)^-1 B u0, diagonal in the right singular basis.
    Eigen::Vector2d wl;
    for (int k = 0; k < 2; ++k) wl(k) = b.w0(k) * b.mu(k) / (b.mu(k) - l1);
    sol.y.segment<2>(2 * i) = b.w * wl;
  }
  sol.y(2 * n) = 1.0;
  sol.y.normalize();
  sol.residual = std::sqrt(block_residual_sq(g, sol.y));
  finish(sol);
  return sol;
}

bool extract_blocks(const Eigen::MatrixXd& a, std::vector<Eigen::Matrix3d>& g) {
  if (a.rows() < 3 || a.rows() % 3 != 0) return false;
  const Eigen::Index n = a.rows() / 3;
  if (a.cols() != 2 * n + 1) return false;
  g.assign(static_cast<std::size_t>(n), Eigen::Matrix3d::Zero());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index r = 3 * i; r < 3 * i + 3; ++r) {
      for (Eigen::Index c = 0; c < 2 * n; ++c) {
        if (c / 2 != i && a(r, c) != 0.0) return false;
      }
    }
    Eigen::Matrix3d& gi = g[static_cast<std::size_t>(i)];
    gi.leftCols<2>() = a.block<3, 2>(3 * i, 2 * i);
    gi.col(2) = a.block<3, 1>(3 * i, 2 * n);
  }
  return true;
}

}  // namespace

Eigen::Matrix3d CoefficientBlock::matrix() const {
  Eigen::Matrix3d m;
  m << alpha, -beta, gamma, -beta, delta, -epsilon, gamma, -epsilon, zeta;
  return m;
}

CoefficientBlock coefficient_block(const PixelPoint& qa, const PixelPoint& qb,
                                   const Intrinsics& intr, const DirectionalPose& pose) {
  const Mat3 k_inv = intr.inverse();
  const Mat3 r_inv = pose.rotation().inverse().matrix();
  const Vec3 a = k_inv * qa.homogeneous();
  const Vec3 b = r_inv * (k_inv * qb.homogeneous());
  const Vec3 c = r_inv * pose.direction();
  return {a.dot(a), a.dot(b), a.dot(c), b.dot(b), b.dot(c), c.dot(c)};
}

std::vector<CoefficientBlock> coefficient_blocks(const CorrespondenceSet& c,
                                                 const Intrinsics& intr,
                                                 const DirectionalPose& pose) {
  c.validate();
  std::vector<CoefficientBlock> out;
  out.reserve(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    out.push_back(coefficient_block(c.a[i], c.b[i], intr, pose));
  }
  return out;
}

Eigen::MatrixXd assemble_system(std::span<const CoefficientBlock> blocks) {
  std::vector<Eigen::Matrix3d> g;
  g.reserve(blocks.size());
  for (const auto& b : blocks) g.push_back(b.matrix());
  return assemble(g);
}

double objective(std::span<const CoefficientBlock> blocks, const Eigen::VectorXd& y) {
  if (y.size() != static_cast<Eigen::Index>(2 * blocks.size() + 1)) {
    throw Error(ErrorKind::kInvalidInput, "y length must be 2N+1");
  }
  const double s = y(y.size() - 1);
  double f = 0.0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const CoefficientBlock& k = blocks[i];
    const double da = y(static_cast<Eigen::Index>(2 * i));
    const double db = y(static_cast<Eigen::Index>(2 * i + 1));
    f += 0.5 * k.alpha * da * da - k.beta * da * db + k.gamma * da * s +
         0.5 * k.delta * db * db - k.epsilon * db * s + 0.5 * k.zeta * s * s;
  }
  return f;
}

ScaleSolution solve_nullspace(std::span<const CoefficientBlock> blocks) {
  std::vector<Eigen::Matrix3d> g;
  g.reserve(blocks.size());
  for (const auto& b : blocks) g.push_back(b.matrix());
  return solve_structured(g);
}

ScaleSolution solve_nullspace(const Eigen::MatrixXd& a) {
  std::vector<Eigen::Matrix3d> g;
  if (extract_blocks(a, g)) return solve_structured(g);
  return solve_nullspace_dense(a);
}

ScaleSolution solve_nullspace_dense(const Eigen::MatrixXd& a) {
  if (a.rows() == 0 || a.cols() < 2) {
    throw Error(ErrorKind::kInsufficientData, "scale system needs at least two unknowns");
  }
  if (!a.allFinite()) throw Error(ErrorKind::kInvalidInput, "non-finite scale system");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const Eigen::Index n = a.cols();
  ScaleSolution sol;
  sol.y = svd.matrixV().col(n - 1);
  // Wide systems have extra exact zeros beyond the computed values.
  const Eigen::Index k = sv.size();
  sol.sigma_min = k == n ? sv(n - 1) : 0.0;
  sol.sigma_next = k >= n - 1 ? sv(n - 2) : 0.0;
  sol.residual = (a * sol.y).norm();
  finish(sol);
  return sol;
}

double init_scale(const Vec3& executed_translation, const DirectionalPose& estimated) {
  const double n = executed_translation.norm();
  if (!(n > 0.0)) throw Error(ErrorKind::kDegenerateInit, "initialization translation is zero");
  return n / estimated.direction().norm();
}

namespace {

TrackId key_of(std::span<const TrackId> keys, std::size_t i) {
  return keys.empty() ? static_cast<TrackId>(i) : keys[i];
}

void check_keys(const ScaleSolution& sol, std::span<const TrackId> keys) {
  if (!keys.empty() && keys.size() != sol.size()) {
    throw Error(ErrorKind::kInvalidInput, "key count differs from solution size");
  }
}

}  // namespace

SparseDepthMap depth_map_current(const ScaleSolution& sol, double s_init_m,
                                 std::span<const TrackId> keys) {
  check_keys(sol, keys);
  if (!(sol.s() > 0.0)) throw Error(ErrorKind::kCheiralityFailure, "non-positive scale entry");
  SparseDepthMap out;
  for (std::size_t i = 0; i < sol.size(); ++i) {
    const double d = sol.da(i) * s_init_m / sol.s();
    if (!(d > 0.0)) {
      throw Error(ErrorKind::kCheiralityFailure, "non-positive depth at " + std::to_string(i));
    }
    out[key_of(keys, i)] = d;
  }
  return out;
}

SparseDepthMap depth_map_reference(const ScaleSolution& ref_sol, const SparseDepthMap& d_cur,
                                   std::span<const TrackId> keys) {
  check_keys(ref_sol, keys);
  SparseDepthMap out;
  for (std::size_t i = 0; i < ref_sol.size(); ++i) {
    const TrackId k = key_of(keys, i);
    const auto it = d_cur.find(k);
    if (it == d_cur.end()) {
      throw Error(ErrorKind::kMissingDepth, "no current depth for key " + std::to_string(k));
    }
    const double d = it->second * ref_sol.da(i) / ref_sol.db(i);
    if (!(d > 0.0)) {
      throw Error(ErrorKind::kCheiralityFailure, "non-positive reference depth");
    }
    out[k] = d;
  }
  return out;
}

double iteration_scale(const ScaleSolution& sol, const SparseDepthMap& d_ref,
                       std::span<const TrackId> keys, ScaleAggregate aggregate) {
  check_keys(sol, keys);
  std::vector<double> v;
  for (std::size_t i = 0; i < sol.size(); ++i) {
    const auto it = d_ref.find(key_of(keys, i));
    if (it == d_ref.end()) continue;
    v.push_back(sol.s() * it->second / sol.da(i));
  }
  if (v.empty()) throw Error(ErrorKind::kMissingDepth, "no shared reference depths");
  if (aggregate == ScaleAggregate::kMedian) {
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
  }
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

}  // namespace acrkit
