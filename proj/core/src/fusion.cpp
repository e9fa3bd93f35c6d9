#include "acrkit/fusion.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "acrkit/error.hpp"

namespace acrkit {

double hypothesis_weight(const PoseHypothesis& h) {
  return static_cast<double>(h.support) * h.spread;
}

FusionWeights FusionWeights::from_raw(std::vector<double> raw) {
  double sum = 0.0;
  for (double w : raw) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorKind::kInvalidInput, "fusion weights must be finite and nonnegative");
    }
    sum += w;
  }
  FusionWeights out;
  out.w = std::move(raw);
  for (double& w : out.w) w = sum > 0.0 ? w / sum : 1.0 / static_cast<double>(out.w.size());
  return out;
}

FusionWeights fusion_weights(std::span<const PoseHypothesis> hypotheses) {
  std::vector<double> raw;
  raw.reserve(hypotheses.size());
  for (const auto& h : hypotheses) raw.push_back(hypothesis_weight(h));
  return FusionWeights::from_raw(std::move(raw));
}

Rotation mean_rotation(std::span<const Rotation> rotations, std::span<const double> weights) {
  if (rotations.empty()) throw Error(ErrorKind::kInsufficientData, "no rotations to average");
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  for (std::size_t i = 0; i < rotations.size(); ++i) {
    const Eigen::Vector4d q = rotations[i].quaternion().coeffs();
    m += weights[i] * q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(m);
  const Eigen::Vector4d v = es.eigenvectors().col(3);
  return Rotation::from_quaternion(Eigen::Quaterniond(v(3), v(0), v(1), v(2)));
}

DirectionalPose fuse_poses(std::span<const PoseHypothesis> hypotheses,
                           const FusionWeights& weights, FusionMode mode) {
  if (hypotheses.empty()) throw Error(ErrorKind::kInsufficientData, "no hypotheses to fuse");
  if (weights.w.size() != hypotheses.size()) {
    throw Error(ErrorKind::kInvalidInput, "one weight per hypothesis is required");
  }
  std::size_t top = 0;
  for (std::size_t i = 1; i < hypotheses.size(); ++i) {
    if (weights.w[i] > weights.w[top]) top = i;
  }
  if (hypotheses.size() == 1 || mode == FusionMode::kWinnerTakeAll) return hypotheses[top].pose;

  std::vector<Rotation> rs;
  rs.reserve(hypotheses.size());
  for (const auto& h : hypotheses) rs.push_back(h.pose.rotation());
  const Rotation r = mean_rotation(rs, weights.w);

  // Anchor the hemisphere on the heaviest hypothesis that has a baseline.
  std::size_t anchor = hypotheses.size();
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    if (hypotheses[i].zero_motion) continue;
    if (anchor == hypotheses.size() || weights.w[i] > weights.w[anchor]) anchor = i;
  }
  if (anchor == hypotheses.size()) return {r, hypotheses[top].pose.direction()};
  const Vec3 ref = hypotheses[anchor].pose.direction();
  Vec3 sum = Vec3::Zero();
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    if (hypotheses[i].zero_motion) continue;
    const Vec3& d = hypotheses[i].pose.direction();
    sum += weights.w[i] * (d.dot(ref) < 0.0 ? -d : d);
  }
  if (!(sum.norm() >= 1e-9)) {
    throw Error(ErrorKind::kAmbiguousDirection, "weighted directions cancel out");
  }
  return {r, sum};
}

namespace {

// Picks one decomposition per hypothesis so that all planes agree best on the
// shared rotation and direction.
void resolve_twins(std::vector<PoseHypothesis>& hyps, const FusionWeights& weights) {
  std::vector<std::size_t> ambiguous;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    if (!hyps[i].zero_motion && !hyps[i].alternatives.empty()) ambiguous.push_back(i);
  }
  if (ambiguous.empty() || hyps.size() < 2 || ambiguous.size() > 12) return;

  const auto options = [&](std::size_t i) {
    std::vector<PoseCandidate> o{{hyps[i].pose, hyps[i].plane_normal}};
    o.insert(o.end(), hyps[i].alternatives.begin(), hyps[i].alternatives.end());
    return o;
  };
  std::vector<std::vector<PoseCandidate>> opts(hyps.size());
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    opts[i] = hyps[i].zero_motion ? std::vector<PoseCandidate>{{hyps[i].pose, hyps[i].plane_normal}}
                                  : options(i);
  }
  std::vector<std::size_t> choice(hyps.size(), 0), best = choice;
  double best_cost = std::numeric_limits<double>::infinity();
  const auto cost = [&]() {
    double c = 0.0;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      for (std::size_t j = i + 1; j < hyps.size(); ++j) {
        const PoseCandidate& a = opts[i][choice[i]];
        const PoseCandidate& b = opts[j][choice[j]];
        double d = rotation_angle(a.pose.rotation() * b.pose.rotation().inverse());
        d *= d;
        if (!hyps[i].zero_motion && !hyps[j].zero_motion) {
          const double t = direction_angle(a.pose.direction(), b.pose.direction());
          d += t * t;
        }
        c += weights.w[i] * weights.w[j] * d;
      }
    }
    return c;
  };
  // Odometer over the candidate lists; the all-primary choice comes first and
  // wins ties.
  while (true) {
    const double c = cost();
    if (c < best_cost) {
      best_cost = c;
      best = choice;
    }
    std::size_t k = 0;
    while (k < ambiguous.size()) {
      const std::size_t i = ambiguous[k];
      if (++choice[i] < opts[i].size()) break;
      choice[i] = 0;
      ++k;
    }
    if (k == ambiguous.size()) break;
  }
  for (std::size_t i : ambiguous) {
    if (best[i] == 0) continue;
    const std::vector<PoseCandidate> o = opts[i];
    hyps[i].pose = o[best[i]].pose;
    hyps[i].plane_normal = o[best[i]].plane_normal;
    hyps[i].alternatives.clear();
    for (std::size_t k = 0; k < o.size(); ++k) {
      if (k != best[i]) hyps[i].alternatives.push_back(o[k]);
    }
  }
}

}  // namespace

I2peResult i2pe(const CorrespondenceSet& c, const PlaneSegmentMap& m_ref,
                const PlaneSegmentMap& m_cur, const Intrinsics& intr, const I2peConfig& cfg) {
  intr.validate();
  c.validate();
  const PlaneSegmentMap e_ref = erode_mask(m_ref, cfg.erosion_radius);
  const PlaneSegmentMap e_cur = erode_mask(m_cur, cfg.erosion_radius);

  I2peResult out;
  out.matching = match_planes(c, e_ref, e_cur, cfg.match);

  std::vector<PoseHypothesis> hyps;
  for (std::size_t k = 0; k < out.matching.pairs.size(); ++k) {
    const PlaneMatch& pm = out.matching.pairs[k];
    if (pm.shared < cfg.min_pair_support) continue;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (e_ref.label_at(c.a[i]) == pm.ref_id && e_cur.label_at(c.b[i]) == pm.cur_id) {
        idx.push_back(i);
      }
    }
    const CorrespondenceSet sub = c.subset(idx);
    try {
      RansacOptions ro = cfg.ransac;
      ro.seed = mix_seed(cfg.ransac.seed, static_cast<std::uint64_t>(k));
      const HomographyEstimate he = estimate_homography_ransac(sub, intr, ro);
      std::vector<std::size_t> local;
      for (std::size_t i = 0; i < sub.size(); ++i) {
        if (he.inlier_mask[i]) local.push_back(i);
      }
      const CorrespondenceSet in = sub.subset(local);
      PoseHypothesis h = decompose_homography(he.homography, intr, in, cfg.decomposition);
      h.inliers.clear();
      for (std::size_t i : local) h.inliers.push_back(idx[i]);
      h.spread = point_spread(in.a, m_ref.size());
      hyps.push_back(std::move(h));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerateModel && e.kind() != ErrorKind::kCheiralityFailure &&
          e.kind() != ErrorKind::kInsufficientData && e.kind() != ErrorKind::kDegenerateDirection) {
        throw;
      }
    }
  }
  if (hyps.empty()) {
    throw Error(ErrorKind::kEstimationFailure,
                "no matched plane pair produced a homography pose");
  }

  out.weights = fusion_weights(hyps);
  if (cfg.resolve_twins) resolve_twins(hyps, out.weights);
  out.pose = fuse_poses(hyps, out.weights, cfg.fusion);
  double zero_share = 0.0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    if (hyps[i].zero_motion) zero_share += out.weights.w[i];
  }
  out.zero_motion = zero_share >= 0.5;
  for (const auto& h : hyps) out.inliers.insert(out.inliers.end(), h.inliers.begin(), h.inliers.end());
  std::sort(out.inliers.begin(), out.inliers.end());
  out.inliers.erase(std::unique(out.inliers.begin(), out.inliers.end()), out.inliers.end());
  out.hypotheses = std::move(hyps);
  return out;
}

}  // namespace acrkit
