#include <acrkit/fusion.hpp>
#include <acrkit/plane_match.hpp>
#include <acrkit/pose_estimation.hpp>
#include <acrkit/scale_solver.hpp>
#include <acrkit/simulator.hpp>
#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

using namespace acrkit;

namespace {

struct Pair {
  Camera cam = Camera::canon_5d3_quarter();
  World world;
  View ref;
  Pose motion;
  SimObservation obs;
};

const Pair& acr_pair() {
  static const Pair p = [] {
    Pair q;
    q.world = generate_scene(default_acr_scene(1), q.cam);
    q.ref = render_view(q.world, Pose::identity(), q.cam);
    q.motion = Pose{Rotation::ry_deg(3.0) * Rotation::rx_deg(-2.0), Vec3(0.04, -0.01, 0.02)};
    q.obs = observe(q.world, q.ref, q.motion, q.cam, {}, {}, 1);
    return q;
  }();
  return p;
}

// Two large planes so that 512 visible tracks exist.
const SimObservation& dense_pair(const Camera& cam, const Pose& m) {
  static const SimObservation o = [&] {
    SceneSpec s;
    s.seed = 9;
    s.planes.push_back(PlaneSpec::rectangle(Vec3(0.2, 0.1, 1.0).normalized(), Vec3(-0.1, 0, 0.6),
                                            Vec2(0.15, 0.15), 300));
    s.planes.push_back(PlaneSpec::rectangle(Vec3(-0.2, 0.0, 1.0).normalized(), Vec3(0.12, 0, 0.7),
                                            Vec2(0.12, 0.15), 300));
    return observe(generate_scene(s, cam), m, cam, {}, {}, 9, false);
  }();
  return o;
}

std::vector<CoefficientBlock> blocks_for(std::size_t n) {
  const Camera cam = Camera::canon_5d3_quarter();
  const Pose m{Rotation::ry_deg(3.0) * Rotation::rx_deg(-2.0), Vec3(0.05, -0.01, 0.02)};
  const SimObservation& o = dense_pair(cam, m);
  std::vector<std::size_t> idx(std::min(n, o.obs.matches.size()));
  std::iota(idx.begin(), idx.end(), 0);
  return coefficient_blocks(o.obs.matches.subset(idx), cam.intrinsics,
                            DirectionalPose(m.rotation, m.translation));
}

void BM_ScaleStructured(benchmark::State& st) {
  const auto blocks = blocks_for(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(solve_nullspace(blocks));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_ScaleStructured)->RangeMultiplier(2)->Range(16, 512)->Complexity();

void BM_ScaleDenseSvd(benchmark::State& st) {
  const Eigen::MatrixXd a = assemble_system(blocks_for(static_cast<std::size_t>(st.range(0))));
  for (auto _ : st) benchmark::DoNotOptimize(solve_nullspace_dense(a));
}
BENCHMARK(BM_ScaleDenseSvd)->RangeMultiplier(4)->Range(16, 512)->Unit(benchmark::kMillisecond);

void BM_HomographyRansac(benchmark::State& st) {
  const Pair& p = acr_pair();
  const CorrespondenceSet& all = p.obs.obs.matches;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all.plane_label[i] == 1) idx.push_back(i);
  }
  const CorrespondenceSet c = all.subset(idx);
  RansacOptions o;
  for (auto _ : st) benchmark::DoNotOptimize(estimate_homography_ransac(c, p.cam.intrinsics, o));
}
BENCHMARK(BM_HomographyRansac)->Unit(benchmark::kMicrosecond);

void BM_FivePoint(benchmark::State& st) {
  const Pair& p = acr_pair();
  const Mat3 k_inv = p.cam.intrinsics.inverse();
  std::vector<Vec3> ma, mb;
  for (std::size_t i = 0; i < 5; ++i) {
    const std::size_t j = i * 37 % p.obs.obs.matches.size();
    ma.push_back(k_inv * p.obs.obs.matches.a[j].homogeneous());
    mb.push_back(k_inv * p.obs.obs.matches.b[j].homogeneous());
  }
  for (auto _ : st) benchmark::DoNotOptimize(essential_five_point(ma, mb));
}
BENCHMARK(BM_FivePoint)->Unit(benchmark::kMicrosecond);

void BM_Epipolar(benchmark::State& st) {
  const Pair& p = acr_pair();
  for (auto _ : st) {
    benchmark::DoNotOptimize(estimate_epipolar(p.obs.obs.matches, p.cam.intrinsics));
  }
}
BENCHMARK(BM_Epipolar)->Unit(benchmark::kMillisecond);

void BM_MatchPlanes(benchmark::State& st) {
  const Pair& p = acr_pair();
  for (auto _ : st) {
    benchmark::DoNotOptimize(match_planes(p.obs.obs.matches, p.ref.mask, p.obs.obs.mask));
  }
}
BENCHMARK(BM_MatchPlanes)->Unit(benchmark::kMillisecond);

void BM_I2pe(benchmark::State& st) {
  const Pair& p = acr_pair();
  for (auto _ : st) {
    benchmark::DoNotOptimize(i2pe(p.obs.obs.matches, p.ref.mask, p.obs.obs.mask, p.cam.intrinsics));
  }
}
BENCHMARK(BM_I2pe)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
