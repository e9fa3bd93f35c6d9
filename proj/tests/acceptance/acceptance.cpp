// Acceptance suite: one PASS/FAIL line per criterion. `--only N` runs one.

#include <acrkit/acr_loop.hpp>
#include <acrkit/io.hpp>
#include <acrkit/metrics.hpp>
#include <acrkit/plane_map.hpp>
#include <acrkit/plane_match.hpp>
#include <acrkit/ransac.hpp>
#include <acrkit/scale_solver.hpp>
#include <acrkit/simulator.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace acrkit;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

// ---- 1: scale-system exactness ---------------------------------------------

Outcome scale_exactness() {
  const Camera cam = Camera::canon_5d3_quarter();
  double worst = 0.0;
  std::size_t min_n = std::numeric_limits<std::size_t>::max();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const World w = generate_scene(default_acr_scene(seed), cam);
    std::mt19937_64 rng(mix_seed(1, seed));
    const Pose motion = random_pose(rng, 10.0, 0.1);
    const SimObservation so = observe(w, motion, cam, {}, {}, seed, false);
    const DirectionalPose pose(motion.rotation, motion.translation);
    const ScaleSolution sol =
        solve_nullspace(coefficient_blocks(so.obs.matches, cam.intrinsics, pose));
    const double s_true = motion.translation.norm();
    min_n = std::min(min_n, sol.size());
    for (std::size_t i = 0; i < sol.size(); ++i) {
      const double ra = (sol.da(i) / sol.s()) / (so.depth_ref[i] / s_true);
      const double rb = (sol.db(i) / sol.s()) / (so.depth_cur[i] / s_true);
      worst = std::max({worst, std::abs(ra - 1.0), std::abs(rb - 1.0)});
    }
  }

  // Timing at N = 512 on a scene with enough visible points.
  SceneSpec big;
  big.seed = 9;
  big.planes.push_back(PlaneSpec::rectangle(Vec3(0.2, 0.1, 1.0).normalized(), Vec3(-0.1, 0, 0.6),
                                            Vec2(0.15, 0.15), 300));
  big.planes.push_back(PlaneSpec::rectangle(Vec3(-0.2, 0.0, 1.0).normalized(), Vec3(0.12, 0, 0.7),
                                            Vec2(0.12, 0.15), 300));
  const World bw = generate_scene(big, cam);
  const Pose m{Rotation::ry_deg(3.0) * Rotation::rx_deg(-2.0), Vec3(0.05, -0.01, 0.02)};
  const SimObservation bo = observe(bw, m, cam, {}, {}, 9, false);
  std::vector<std::size_t> idx(512);
  std::iota(idx.begin(), idx.end(), 0);
  if (bo.obs.matches.size() < 512) return {false, "fixture has fewer than 512 visible tracks"};
  const CorrespondenceSet c512 = bo.obs.matches.subset(idx);
  double slowest = 0.0;
  for (int k = 0; k < 5; ++k) {
    const auto t0 = Clock::now();
    const ScaleSolution s =
        solve_nullspace(coefficient_blocks(c512, cam.intrinsics, DirectionalPose(m.rotation, m.translation)));
    slowest = std::max(slowest, seconds_since(t0));
    if (s.size() != 512) return {false, "wrong solution size"};
  }
  const bool pass = min_n >= 20 && worst < 1e-8 && slowest < 0.05;
  return {pass, "min N " + std::to_string(min_n) + ", max relative ratio error " + fmt(worst) +
                    " (< 1e-8), slowest N=512 solve " + fmt(slowest * 1e3) + " ms (< 50 ms)"};
}

// ---- 2: hand-eye invariance of the initial scale ---------------------------

Outcome hand_eye_invariance() {
  const auto t0 = Clock::now();
  const Vec3 init(0.0, 0.0, 0.05);
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Pose x = random_pose(rng, 90.0, 0.2);
    // The camera moves by X (I, t) X^-1 when the hand translates by t.
    const Pose cam_motion = camera_motion(x, Pose{Rotation(), init});
    // Zero-noise estimate: true rotation and direction of the camera motion.
    const DirectionalPose est(cam_motion.rotation, cam_motion.translation);
    const double s = init_scale(init, est);
    worst = std::max(worst, std::abs(s - cam_motion.translation.norm()));
  }
  const double dt = seconds_since(t0);
  return {worst <= 1e-12 && dt < 1.0,
          "max |S_init - S_true| " + fmt(worst) + " m over 100 X (<= 1e-12), " + fmt(dt) + " s"};
}

// ---- 3: noise benchmark ordering -------------------------------------------

Outcome noise_ordering() {
  const auto t0 = Clock::now();
  const Camera cam = Camera::canon_5d3();
  const World w = generate_scene(default_bench_scene(0), cam);
  std::vector<double> rs;
  for (int r = 0; r <= 50; r += 2) rs.push_back(r);
  const std::vector<double> mus{0.01, 0.5, 0.9};
  const auto rows = bench_noise_sweep(w, cam, default_bench_motion(), rs, mus, 20, 0);
  std::map<std::pair<double, double>, std::pair<std::vector<double>, std::vector<double>>> by;
  for (const BenchRow& row : rows) {
    auto& cell = by[{row.mu, row.r}];
    (row.method == BenchMethod::kDeH ? cell.first : cell.second).push_back(row.rot_err_deg);
  }
  const auto med = [&](double mu, double r, bool deh) {
    const auto& cell = by[{mu, r}];
    return median_error(deh ? cell.first : cell.second);
  };
  std::vector<std::string> bad_a, bad_b, bad_c;
  double min_gap_ratio = std::numeric_limits<double>::infinity();
  for (double r : rs) {
    if (r >= 2.0) {
      const double d = med(0.01, r, true), e = med(0.01, r, false);
      if (!(e > d)) bad_a.push_back(fmt(r));
      min_gap_ratio = std::min(min_gap_ratio, e / std::max(d, 1e-300));
    }
    if (!(med(0.5, r, true) < 1.0)) bad_b.push_back(fmt(r));
    if (r >= 2.0 && !(med(0.9, r, true) > 5.0 && med(0.9, r, false) > 5.0)) {
      bad_c.push_back(fmt(r) + "(" + fmt(med(0.9, r, true), 3) + "/" + fmt(med(0.9, r, false), 3) + ")");
    }
  }
  const double dt = seconds_since(t0);
  const auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : " ") + x;
    return s.empty() ? std::string("none") : s;
  };
  std::string detail = "(a) mu=1% violations at r: " + join(bad_a) + "; (b) mu=50% De-H >= 1 deg at r: " +
                       join(bad_b) + "; (c) mu=90% not both > 5 deg at r [De-H/epipolar]: " +
                       join(bad_c) + "; " + fmt(dt) + " s";
  return {bad_a.empty() && bad_b.empty() && bad_c.empty() && dt < 300.0, detail};
}

// ---- 4 and 5: relocalization loops -----------------------------------------

struct LoopRun {
  AcrTrace acr;
  AcrTrace bisection;
};

LoopRun run_pair(std::uint64_t seed, const LightingProxySpec& lighting) {
  const Camera cam = Camera::canon_5d3_quarter();
  std::mt19937_64 rng(mix_seed(77, seed));
  const Pose x = random_pose(rng, 30.0, 0.1);
  const Pose off = random_pose(rng, 5.0, 0.05);
  const World w = generate_scene(default_acr_scene(seed), cam);
  AcrConfig cfg;
  cfg.seed = seed;
  SimulatedExecutor a(w, {x, cam}, off, {}, lighting, seed);
  SimulatedExecutor b(w, {x, cam}, off, {}, lighting, seed);
  return {run_acr(a, cfg), run_bisection_baseline(b, cfg)};
}

Outcome iteration_ratio() {
  const auto t0 = Clock::now();
  double acr_sum = 0.0, bis_sum = 0.0;
  std::string its;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const LoopRun r = run_pair(seed, {});
    const auto count = [](const AcrTrace& t) { return static_cast<double>(t.iterations); };
    acr_sum += count(r.acr);
    bis_sum += count(r.bisection);
    its += (its.empty() ? "" : " ") + std::to_string(r.acr.iterations) + "/" +
           std::to_string(r.bisection.iterations) +
           (r.acr.converged() ? "" : "!a") + (r.bisection.converged() ? "" : "!b");
  }
  const double acr_mean = acr_sum / 20.0, bis_mean = bis_sum / 20.0;
  const double ratio = bis_mean / acr_mean;
  const double dt = seconds_since(t0);
  return {ratio >= 3.0 && acr_mean <= 4.0 && dt < 120.0,
          "acr mean " + fmt(acr_mean) + " (<= 4.0), bisection mean " + fmt(bis_mean) + ", ratio " +
              fmt(ratio) + " (>= 3.0), " + fmt(dt) + " s; per seed acr/bisection: " + its};
}

Outcome illumination() {
  const auto t0 = Clock::now();
  const LightingProxySpec lighting{0.6, 0.05, 0.0};
  int acr_ok = 0, bis_bad = 0;
  std::string errs;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const LoopRun r = run_pair(seed, lighting);
    const bool a = r.acr.converged() && r.acr.final_rot_err_deg && *r.acr.final_rot_err_deg < 0.1;
    const bool b = !r.bisection.converged() || !r.bisection.final_rot_err_deg ||
                   *r.bisection.final_rot_err_deg > 1.0;
    acr_ok += a;
    bis_bad += b;
    errs += (errs.empty() ? "" : " ") +
            fmt(r.acr.final_rot_err_deg.value_or(NAN), 2) + "/" +
            std::string(acr_status_name(r.bisection.status)) + ":" +
            fmt(r.bisection.final_rot_err_deg.value_or(NAN), 2);
  }
  const double dt = seconds_since(t0);
  return {acr_ok >= 18 && bis_bad >= 18 && dt < 300.0,
          "acr converged under 0.1 deg in " + std::to_string(acr_ok) +
              "/20 (>= 18), bisection failed or over 1 deg in " + std::to_string(bis_bad) +
              "/20 (>= 18), " + fmt(dt) + " s; per seed acr deg / bisection status:deg: " + errs};
}

// ---- 6: exact matching optimality ------------------------------------------

PlaneSegmentMap random_rect_map(std::mt19937_64& rng, int planes, int w, int h) {
  PlaneSegmentMap m(w, h);
  std::uniform_int_distribution<int> ux(0, w - 12), uy(0, h - 12), ext(6, 30);
  for (int id = 1; id <= planes; ++id) {
    const int x0 = ux(rng), y0 = uy(rng);
    const int x1 = std::min(w - 1, x0 + ext(rng)), y1 = std::min(h - 1, y0 + ext(rng));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) m.set(x, y, static_cast<PlaneSegmentMap::Label>(id));
    }
  }
  return m.compacted();
}

Outcome matching_optimality() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(606);
  int scenes = 0, mismatches = 0;
  for (int h = 1; h <= 5; ++h) {
    for (int m = h; m <= 5; ++m) {
      for (int rep = 0; rep < 8; ++rep) {
        const PlaneSegmentMap ref = random_rect_map(rng, h, 96, 72);
        const PlaneSegmentMap cur = random_rect_map(rng, m, 96, 72);
        const int hh = ref.plane_count(), mm = cur.plane_count();
        if (hh < 1 || hh > mm) continue;
        CorrespondenceSet c;
        std::uniform_real_distribution<double> u(0.0, 95.0), v(0.0, 71.0);
        for (int i = 0; i < 300; ++i) c.add({u(rng), v(rng)}, {u(rng), v(rng)});
        const Eigen::MatrixXd w = assemble_affinity(node_affinities(c, ref, cur),
                                                    build_plane_graph(ref), build_plane_graph(cur),
                                                    15.0);
        const Assignment exact = solve_matching(w, hh, mm, MatchMode::kExact);
        // Brute force over every injection.
        double best = -std::numeric_limits<double>::infinity();
        std::vector<int> best_col;
        std::function<void(std::vector<int>&, std::vector<bool>&)> rec =
            [&](std::vector<int>& pick, std::vector<bool>& used) {
              if (static_cast<int>(pick.size()) == hh) {
                Assignment a;
                a.h = hh;
                a.m = mm;
                a.column = pick;
                const double f = matching_objective(w, a);
                if (f > best) {
                  best = f;
                  best_col = pick;
                }
                return;
              }
              for (int col = 0; col < mm; ++col) {
                if (used[static_cast<std::size_t>(col)]) continue;
                used[static_cast<std::size_t>(col)] = true;
                pick.push_back(col);
                rec(pick, used);
                pick.pop_back();
                used[static_cast<std::size_t>(col)] = false;
              }
            };
        std::vector<int> pick;
        std::vector<bool> used(static_cast<std::size_t>(mm), false);
        rec(pick, used);
        ++scenes;
        const bool same = exact.column == best_col || matching_objective(w, exact) == best;
        if (!same) ++mismatches;
      }
    }
  }
  const double dt = seconds_since(t0);
  return {mismatches == 0 && scenes > 0 && dt < 10.0,
          std::to_string(scenes) + " scenes with H <= M <= 5, " + std::to_string(mismatches) +
              " below the brute-force optimum, " + fmt(dt) + " s"};
}

// ---- 7: commanded motion undoes the estimate --------------------------------

Outcome inversion_identity() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> scale(0.0, 1.0);
  double worst = 0.0;
  int n = 0;
  while (n < 10000) {
    const Pose e = random_pose(rng, 180.0, 1.0);
    if (e.translation.norm() < 1e-9) continue;
    const DirectionalPose est(e.rotation, e.translation);
    const double s = scale(rng);
    const Pose id = compose(hand_motion_from_estimate(est, s), est.with_scale(s));
    worst = std::max({worst, (id.rotation.matrix() - Mat3::Identity()).cwiseAbs().maxCoeff(),
                      id.translation.cwiseAbs().maxCoeff()});
    ++n;
  }
  const double dt = seconds_since(t0);
  return {worst <= 1e-12 && dt < 1.0,
          "max deviation from identity " + fmt(worst) + " over 10^4 estimates (<= 1e-12), " + fmt(dt) + " s"};
}

// ---- 8: A y is the gradient of the objective --------------------------------

Outcome gradient_check() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0), px(0.0, 1400.0);
  const Intrinsics k{1400.0, 1400.0, 720.0, 480.0};
  double worst = 0.0;
  for (int scene = 0; scene < 10; ++scene) {
    const Pose p = random_pose(rng, 20.0, 0.3);
    const DirectionalPose pose(p.rotation, p.translation + Vec3(0.0, 0.0, 0.05));
    CorrespondenceSet c;
    for (int i = 0; i < 15; ++i) c.add({px(rng), px(rng) * 0.7}, {px(rng), px(rng) * 0.7});
    const auto blocks = coefficient_blocks(c, k, pose);
    const Eigen::MatrixXd a = assemble_system(blocks);
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::VectorXd y(a.cols());
      for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = u(rng);
      const Eigen::VectorXd ay = a * y;
      const double hstep = 1e-4;
      // Row triple i is the gradient of the i-th term w.r.t. (d_a, d_b, s).
      Eigen::VectorXd fd_terms(ay.size());
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        const std::span<const CoefficientBlock> one(&blocks[i], 1);
        const Eigen::Vector3d yi(y(2 * i), y(2 * i + 1), y(y.size() - 1));
        for (int j = 0; j < 3; ++j) {
          Eigen::VectorXd yp = yi, ym = yi;
          yp(j) += hstep;
          ym(j) -= hstep;
          fd_terms(3 * i + j) = (objective(one, yp) - objective(one, ym)) / (2.0 * hstep);
        }
      }
      worst = std::max(worst, (ay - fd_terms).norm() / ay.norm());
      // Summing the s rows gives the full gradient.
      Eigen::VectorXd collapsed = Eigen::VectorXd::Zero(y.size());
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        collapsed(2 * i) = ay(3 * i);
        collapsed(2 * i + 1) = ay(3 * i + 1);
        collapsed(y.size() - 1) += ay(3 * i + 2);
      }
      Eigen::VectorXd fd(y.size());
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        Eigen::VectorXd yp = y, ym = y;
        yp(i) += hstep;
        ym(i) -= hstep;
        fd(i) = (objective(blocks, yp) - objective(blocks, ym)) / (2.0 * hstep);
      }
      worst = std::max(worst, (collapsed - fd).norm() / collapsed.norm());
    }
  }
  const double dt = seconds_since(t0);
  return {worst <= 1e-6 && dt < 5.0,
          "max relative error of A y against per-term and summed FD gradients " + fmt(worst) + " at 100 points (<= 1e-6), " + fmt(dt) + " s"};
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "scale-system exactness", scale_exactness},
    {2, "hand-eye invariance of the initial scale", hand_eye_invariance},
    {3, "noise benchmark ordering", noise_ordering},
    {4, "iteration-count ratio", iteration_ratio},
    {5, "illumination robustness", illumination},
    {6, "exact matching optimality", matching_optimality},
    {7, "commanded motion inverts the estimate", inversion_identity},
    {8, "scale-system gradient check", gradient_check},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: acrkit_acceptance [--only N]\n";
      return 2;
    }
  }
  bool all = true;
  for (const Criterion& c : kCriteria) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name
              << "): " << o.detail << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
