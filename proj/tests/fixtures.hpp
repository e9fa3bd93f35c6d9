#pragma once

#include <acrkit/correspondence.hpp>
#include <acrkit/error.hpp>
#include <acrkit/geometry.hpp>
#include <acrkit/simulator.hpp>
#include <gtest/gtest.h>

#include <random>
#include <string>

namespace acrkit::testing {

inline Camera quarter_camera() { return Camera::canon_5d3_quarter(); }

/// Noise-free pairs from one fronto-parallel plane at depth `z`, seen from the
/// identity camera and from `motion`.
inline CorrespondenceSet planar_pair(const Pose& motion, double z, std::size_t n,
                                     std::uint64_t seed = 1, const Camera& cam = quarter_camera()) {
  SceneSpec s;
  const double hx = 0.45 * z * cam.image.width / cam.intrinsics.fx;
  const double hy = 0.45 * z * cam.image.height / cam.intrinsics.fy;
  s.planes.push_back(PlaneSpec::rectangle(Vec3::UnitZ(), Vec3(0.0, 0.0, z), Vec2(hx, hy), n));
  s.seed = seed;
  const World w = generate_scene(s, cam);
  return observe(w, motion, cam, {}, {}, seed, false).obs.matches;
}

/// Noise-free pairs from points spread through a box 1.5 - 4 m deep.
inline CorrespondenceSet general_pair(const Pose& motion, std::size_t n, std::uint64_t seed = 1,
                                      const Camera& cam = quarter_camera()) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), d(1.5, 4.0);
  CorrespondenceSet c;
  while (c.size() < n) {
    const double z = d(rng);
    const Vec3 x(u(rng) * 0.4 * z, u(rng) * 0.3 * z, z);
    const Vec3 xb = motion.apply(x);
    if (xb.z() <= 0.1) continue;
    const PixelPoint qa = project(cam.intrinsics, Pose::identity(), x);
    const PixelPoint qb = project(cam.intrinsics, motion, x);
    c.add(qa, qb, std::nullopt, static_cast<TrackId>(c.size()));
  }
  return c;
}

inline Rotation random_rotation(std::mt19937_64& rng, double max_deg = 180.0) {
  return random_pose(rng, max_deg, 0.0).rotation;
}

/// Passes when `f` throws an acrkit::Error of the given kind.
template <class F>
::testing::AssertionResult throws_kind(F&& f, ErrorKind kind) {
  try {
    f();
  } catch (const Error& e) {
    if (e.kind() == kind) return ::testing::AssertionSuccess();
    return ::testing::AssertionFailure()
           << "threw " << e.kind_name() << " (" << e.what() << "), expected "
           << error_kind_name(kind);
  }
  return ::testing::AssertionFailure() << "did not throw " << error_kind_name(kind);
}

}  // namespace acrkit::testing
