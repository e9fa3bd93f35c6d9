#include "acrkit/acr_loop.hpp"

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>
#include <unordered_map>

#include "acrkit/error.hpp"
#include "acrkit/scale_solver.hpp"

namespace acrkit {

void AcrConfig::validate() const {
  if (!(scale_epsilon_m > 0.0) || !(rotation_epsilon_deg > 0.0)) {
    throw Error(ErrorKind::kConfig, "convergence epsilons must be positive");
  }
  if (max_iterations < 1) throw Error(ErrorKind::kConfig, "max_iterations must be >= 1");
  if (!(init_translation.norm() > 0.0)) {
    throw Error(ErrorKind::kConfig, "init_translation must be nonzero");
  }
}

std::string_view acr_status_name(AcrStatus s) {
  switch (s) {
    case AcrStatus::kInit: return "init";
    case AcrStatus::kMoving: return "moving";
    case AcrStatus::kConverged: return "converged";
    case AcrStatus::kExhausted: return "exhausted";
    case AcrStatus::kFailed: return "failed";
  }
  return "unknown";
}

Pose hand_motion_from_estimate(const DirectionalPose& est, double scale) {
  const Rotation r_inv = est.rotation().inverse();
  return {r_inv, -(r_inv * (scale * est.direction()))};
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Pairs keypoints of two observations captured under the same conditions.
CorrespondenceSet join_keypoints(const Observation& a, const Observation& b) {
  std::unordered_map<TrackId, std::size_t> in_b;
  for (std::size_t i = 0; i < b.keypoint_tracks.size(); ++i) in_b[b.keypoint_tracks[i]] = i;
  CorrespondenceSet out;
  for (std::size_t i = 0; i < a.keypoint_tracks.size(); ++i) {
    const auto it = in_b.find(a.keypoint_tracks[i]);
    if (it == in_b.end()) continue;
    out.add(a.keypoints[i], b.keypoints[it->second], std::nullopt, a.keypoint_tracks[i]);
  }
  return out;
}

// Inlier correspondences whose track has a known depth.
CorrespondenceSet with_depth(const CorrespondenceSet& c, std::span<const std::size_t> inliers,
                             const SparseDepthMap& depths) {
  std::vector<std::size_t> keep;
  for (std::size_t i : inliers) {
    if (depths.count(c.track_id[i])) keep.push_back(i);
  }
  return c.subset(keep);
}

SparseDepthMap reference_depths(const CorrespondenceSet& c, const I2peResult& est,
                                const SparseDepthMap& d_cur, const Intrinsics& intr) {
  const CorrespondenceSet sub = with_depth(c, est.inliers, d_cur);
  if (sub.empty()) throw Error(ErrorKind::kMissingDepth, "no tracked inlier links the reference");
  if (!est.zero_motion) {
    const ScaleSolution sol = solve_nullspace(coefficient_blocks(sub, intr, est.pose));
    return depth_map_reference(sol, d_cur, sub.track_id);
  }
  // Pure rotation: the reference sees the same point rotated back.
  const Mat3 k_inv = intr.inverse();
  const Rotation r_inv = est.pose.rotation().inverse();
  SparseDepthMap out;
  for (std::size_t i = 0; i < sub.size(); ++i) {
    const Vec3 x = r_inv * (d_cur.at(sub.track_id[i]) * (k_inv * sub.b[i].homogeneous()));
    out[sub.track_id[i]] = x.z();
  }
  return out;
}

class Tracer {
 public:
  explicit Tracer(MotionExecutor& ex) : ex_(ex) {}

  AcrRecord record(std::size_t iter) const {
    AcrRecord r;
    r.iter = iter;
    r.rot_err_deg = kNan;
    r.trans_err_m = kNan;
    if (const auto e = ex_.residual()) {
      r.rot_err_deg = rotation_angle(e->rotation);
      r.trans_err_m = e->translation.norm();
    }
    return r;
  }

  void finish(AcrTrace& t, AcrStatus status) const {
    t.status = status;
    if (const auto e = ex_.residual()) {
      t.final_rot_err_deg = rotation_angle(e->rotation);
      t.final_trans_err_m = e->translation.norm();
    }
    if (const auto a = ex_.residual_afd()) t.final_afd_px = a->afd;
  }

 private:
  MotionExecutor& ex_;
};

void fail(AcrTrace& t, const Tracer& tracer, std::size_t iter, const Error& e) {
  AcrRecord r = tracer.record(iter);
  r.status = AcrStatus::kFailed;
  t.records.push_back(r);
  t.failure = std::string(e.kind_name()) + ": " + e.what();
  tracer.finish(t, AcrStatus::kFailed);
}

}  // namespace

AcrTrace run_acr(MotionExecutor& ex, const AcrConfig& cfg) {
  cfg.validate();
  const Intrinsics& intr = ex.intrinsics();
  const Tracer tracer(ex);
  AcrTrace trace;
  const auto i2pe_cfg = [&](std::uint64_t step) {
    I2peConfig c = cfg.i2pe;
    c.ransac.seed = mix_seed(cfg.seed, step);
    return c;
  };
  std::size_t iter = 0;
  try {
    const Observation obs0 = ex.observe();
    const I2peResult first = i2pe(obs0.matches, ex.reference_mask(), obs0.mask, intr, i2pe_cfg(0));
    if (first.zero_motion && rotation_angle(first.pose.rotation()) < cfg.rotation_epsilon_deg) {
      AcrRecord r = tracer.record(0);
      r.status = AcrStatus::kConverged;
      r.estimate = first.pose;
      r.zero_motion = true;
      trace.records.push_back(r);
      tracer.finish(trace, AcrStatus::kConverged);
      return trace;
    }

    // Initialization: a known translation gives metric depths of I0.
    const Pose init_motion{Rotation(), cfg.init_translation};
    Observation obs = ex.execute(init_motion);
    AcrRecord init = tracer.record(0);
    init.status = AcrStatus::kInit;
    init.command = init_motion;
    const CorrespondenceSet j = join_keypoints(obs0, obs);
    RansacOptions ro = cfg.i2pe.ransac;
    ro.seed = mix_seed(cfg.seed, 1);
    const PoseHypothesis dir =
        estimate_translation_direction(j, intr, ro, cfg.i2pe.decomposition.min_parallax_px);
    if (dir.zero_motion) {
      throw Error(ErrorKind::kDegenerateInit, "initialization translation produced no parallax");
    }
    const double s_init = init_scale(cfg.init_translation, dir.pose);
    const CorrespondenceSet jin = j.subset(dir.inliers);
    const DirectionalPose jpose(Rotation(), dir.pose.direction());
    const ScaleSolution js = solve_nullspace(coefficient_blocks(jin, intr, jpose));
    const SparseDepthMap d0 = depth_map_current(js, s_init, jin.track_id);
    const SparseDepthMap d_ref = reference_depths(obs0.matches, first, d0, intr);
    init.estimate = dir.pose;
    init.scale_m = s_init;
    trace.records.push_back(init);

    for (iter = 1; iter <= cfg.max_iterations; ++iter) {
      AcrRecord r = tracer.record(iter);
      const I2peResult est = i2pe(obs.matches, ex.reference_mask(), obs.mask, intr, i2pe_cfg(iter + 1));
      r.estimate = est.pose;
      r.zero_motion = est.zero_motion;
      if (!est.zero_motion) {
        const CorrespondenceSet sub = with_depth(obs.matches, est.inliers, d_ref);
        const ScaleSolution sol = solve_nullspace(coefficient_blocks(sub, intr, est.pose));
        r.scale_m = iteration_scale(sol, d_ref, sub.track_id);
      }
      if (r.scale_m < cfg.scale_epsilon_m &&
          rotation_angle(est.pose.rotation()) < cfg.rotation_epsilon_deg) {
        r.status = AcrStatus::kConverged;
        trace.records.push_back(r);
        tracer.finish(trace, AcrStatus::kConverged);
        return trace;
      }
      if (iter == cfg.max_iterations) {
        r.status = AcrStatus::kExhausted;
        trace.records.push_back(r);
        break;
      }
      r.command = hand_motion_from_estimate(est.pose, r.scale_m);
      trace.records.push_back(r);
      obs = ex.execute(r.command);
      ++trace.iterations;
    }
  } catch (const Error& e) {
    fail(trace, tracer, iter, e);
    return trace;
  }
  tracer.finish(trace, AcrStatus::kExhausted);
  return trace;
}

AcrTrace run_bisection_baseline(MotionExecutor& ex, const AcrConfig& cfg) {
  cfg.validate();
  const Intrinsics& intr = ex.intrinsics();
  const Tracer tracer(ex);
  AcrTrace trace;
  double step = cfg.init_translation.norm();
  std::optional<Vec3> previous;
  std::size_t iter = 1;
  try {
    Observation obs = ex.observe();
    for (; iter <= cfg.max_iterations; ++iter) {
      AcrRecord r = tracer.record(iter);
      EpipolarOptions eo = cfg.epipolar;
      eo.ransac.seed = mix_seed(cfg.seed, iter);
      const PoseHypothesis est = estimate_epipolar(obs.matches, intr, eo);
      r.estimate = est.pose;
      r.zero_motion = est.zero_motion;
      if ((est.zero_motion || step < cfg.scale_epsilon_m) &&
          rotation_angle(est.pose.rotation()) < cfg.rotation_epsilon_deg) {
        r.status = AcrStatus::kConverged;
        trace.records.push_back(r);
        tracer.finish(trace, AcrStatus::kConverged);
        return trace;
      }
      if (iter == cfg.max_iterations) {
        r.status = AcrStatus::kExhausted;
        trace.records.push_back(r);
        break;
      }
      if (!est.zero_motion) {
        const Vec3& d = est.pose.direction();
        if (previous && previous->dot(d) < 0.0) step *= 0.5;
        previous = d;
        r.scale_m = step;
      }
      r.command = hand_motion_from_estimate(est.pose, r.scale_m);
      trace.records.push_back(r);
      obs = ex.execute(r.command);
      ++trace.iterations;
    }
  } catch (const Error& e) {
    fail(trace, tracer, iter, e);
    return trace;
  }
  tracer.finish(trace, AcrStatus::kExhausted);
  return trace;
}

void write_trace_jsonl(const AcrTrace& trace, std::ostream& out) {
  const auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
  for (const AcrRecord& r : trace.records) {
    nlohmann::json j;
    j["iter"] = r.iter;
    j["S_i_m"] = num(r.scale_m);
    j["rot_err_deg"] = num(r.rot_err_deg);
    j["trans_err_m"] = num(r.trans_err_m);
    j["status"] = acr_status_name(r.status);
    out << j.dump() << '\n';
  }
}

}  // namespace acrkit
