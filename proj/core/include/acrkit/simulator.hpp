#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "acrkit/acr_loop.hpp"
#include "acrkit/geometry.hpp"
#include "acrkit/plane_map.hpp"
#include "acrkit/pose_estimation.hpp"

namespace acrkit {

/// A planar polygon {Q : n.Q = offset}. Polygon vertices are 2-D coordinates
/// in the plane basis (e1, e2) around the foot point offset * n, with
/// e1 = normalize(x - (n.x) n) and e2 = n x e1.
struct PlaneSpec {
  Vec3 normal = Vec3::UnitZ();
  double offset = 1.0;
  std::vector<Vec2> polygon;
  std::size_t point_count = 0;

  /// Axis-aligned rectangle (in plane coordinates) centered on `center`.
  static PlaneSpec rectangle(const Vec3& normal, const Vec3& center, const Vec2& half_extents,
                             std::size_t point_count);

  Vec3 e1() const;
  Vec3 e2() const;
  Vec3 to_world(const Vec2& p) const;
};

/// Points off every plane, spread over the background of the reference view.
struct ClutterSpec {
  std::size_t count = 0;
  double min_depth_m = 0.35;
  double max_depth_m = 0.9;
};

struct SceneSpec {
  std::vector<PlaneSpec> planes;
  ClutterSpec clutter;
  std::uint64_t seed = 0;

  /// Throws invalid-scene for non-unit normals, offsets <= 0, polygons with
  /// fewer than 3 vertices or zero area, or point counts < 4.
  void validate() const;
};

struct Camera {
  Intrinsics intrinsics;
  ImageSize image;

  /// 5760 x 3840, 36 x 24 mm sensor behind a 35 mm lens.
  static Camera canon_5d3();
  /// The same body at quarter resolution, 1440 x 960 with f = 1400 px.
  static Camera canon_5d3_quarter();
};

struct WorldPoint {
  Vec3 position = Vec3::Zero();
  int plane = 0;  // 1-based index into SceneSpec::planes, 0 for clutter
  TrackId track = 0;
};

struct World {
  std::vector<PlaneSpec> planes;
  std::vector<WorldPoint> points;
};

/// Samples every plane polygon uniformly, then clutter on the background
/// pixels of the reference camera (identity pose). Deterministic in the seed.
World generate_scene(const SceneSpec& spec, const Camera& camera = {});

/// Plane mask from polygon projections, painted far to near. Raw labels are
/// 1-based plane indices (not compacted). Planes with a vertex behind the
/// camera are skipped.
PlaneSegmentMap render_plane_labels(const World& world, const Pose& camera_pose,
                                    const Camera& camera);

/// Noise-free projections of the world from one camera pose.
struct View {
  /// Compacted mask plus the plane index of every mask id (mask_planes[id-1]).
  PlaneSegmentMap mask;
  std::vector<int> mask_planes;
  /// Per world point: projection if visible, i.e. in front, inside the image
  /// and not covered by another plane.
  std::vector<std::optional<PixelPoint>> pixels;
  std::vector<double> depths;
};

/// Visibility is decided per point against the projected polygons, so the
/// mask is optional.
View render_view(const World& world, const Pose& camera_pose, const Camera& camera,
                 bool with_mask = true);

struct NoiseSpec {
  double magnitude_r = 0.0;  // pixels
  double ratio_mu = 0.0;

  void validate() const;
};

struct LightingProxySpec {
  double off_plane_outlier_fraction = 0.0;
  double in_plane_outlier_fraction = 0.0;
  double dropout_fraction = 0.0;

  /// Fractions in [0, 1] with in_plane <= off_plane.
  void validate() const;
  bool active() const {
    return off_plane_outlier_fraction > 0.0 || in_plane_outlier_fraction > 0.0 ||
           dropout_fraction > 0.0;
  }
};

struct SimObservation {
  Observation obs;
  /// Ground truth per match: depths in both views, noise-free current pixel,
  /// and whether the lighting proxy replaced the match.
  std::vector<double> depth_ref;
  std::vector<double> depth_cur;
  std::vector<PixelPoint> clean_cur;
  std::vector<bool> contaminated;
  /// Raw mask ids mapped to plane indices (see View).
  std::vector<int> mask_planes;
};

/// Correspondences between the reference view and the camera at
/// `camera_pose`. Noise perturbs round(mu * n) of the current keypoints by
/// U(-r, r) per axis; the lighting proxy then swaps matches for uniform
/// in-image outliers (plane tracks at the in-plane rate, clutter at the
/// off-plane rate) and drops a fraction. Throws empty-observation when no
/// track is visible in both views.
SimObservation observe(const World& world, const View& reference, const Pose& camera_pose,
                       const Camera& camera, const NoiseSpec& noise,
                       const LightingProxySpec& lighting, std::uint64_t seed,
                       bool with_mask = true);

/// Convenience overload that renders the reference view at identity.
SimObservation observe(const World& world, const Pose& camera_pose, const Camera& camera,
                       const NoiseSpec& noise, const LightingProxySpec& lighting,
                       std::uint64_t seed, bool with_mask = true);

struct RigSpec {
  /// Maps hand coordinates to camera coordinates; hidden from the loop.
  Pose hand_eye;
  Camera camera;
};

/// Camera motion induced by a hand motion: X M X^-1.
Pose camera_motion(const Pose& hand_eye, const Pose& hand_motion);

/// A simulated robot: the camera starts at `initial_offset` relative to the
/// reference camera; every command moves the hand, which moves the camera
/// through the hidden hand-eye transform.
class SimulatedExecutor : public MotionExecutor {
 public:
  SimulatedExecutor(World world, RigSpec rig, const Pose& initial_offset, NoiseSpec noise,
                    LightingProxySpec lighting, std::uint64_t seed);

  const Intrinsics& intrinsics() const override { return rig_.camera.intrinsics; }
  const PlaneSegmentMap& reference_mask() const override { return reference_.mask; }
  Observation observe() override;
  Observation execute(const Pose& hand_motion) override;
  std::optional<Pose> residual() const override { return pose_; }
  std::optional<AfdReport> residual_afd() const override;

  const Pose& camera_pose() const { return pose_; }
  std::size_t motions() const { return motions_; }
  const SimObservation& last() const { return last_; }

 private:
  World world_;
  RigSpec rig_;
  View reference_;
  Pose pose_;
  NoiseSpec noise_;
  LightingProxySpec lighting_;
  std::uint64_t seed_;
  std::uint64_t captures_ = 0;
  std::size_t motions_ = 0;
  SimObservation last_;
};

/// Pose with a uniformly random axis, angle uniform in [0, max_angle_deg]
/// and translation uniform in the ball of radius max_offset_m.
Pose random_pose(std::mt19937_64& rng, double max_angle_deg, double max_offset_m);

/// Three tilted planes plus background clutter at desk distance
/// (0.35 - 0.9 m), sized for canon_5d3_quarter().
SceneSpec default_acr_scene(std::uint64_t seed = 0);

/// One plane of 1000 points about 1 m away, sized for canon_5d3().
SceneSpec default_bench_scene(std::uint64_t seed = 0);

enum class BenchMethod { kDeH, kEpipolar };

std::string_view bench_method_name(BenchMethod m);

struct BenchRow {
  double r = 0.0;
  double mu = 0.0;
  std::size_t trial = 0;
  BenchMethod method = BenchMethod::kDeH;
  /// NaN when the estimator failed.
  double rot_err_deg = 0.0;
  double dir_err_deg = 0.0;
};

struct BenchOptions {
  RansacOptions ransac;
  /// Worker threads; 0 uses ACRKIT_THREADS or the hardware concurrency.
  std::size_t threads = 0;
};

/// For every (r, mu, trial): perturb the reference-to-motion correspondences,
/// run homography decomposition (De-H) and the epipolar estimator, and record
/// their errors against `motion`. Rows come in (r, mu, trial, method) order
/// and are identical for any thread count.
std::vector<BenchRow> bench_noise_sweep(const World& world, const Camera& camera,
                                        const Pose& motion, const std::vector<double>& r_values,
                                        const std::vector<double>& mu_values, std::size_t trials,
                                        std::uint64_t seed, const BenchOptions& opts = {});

/// Header r,mu,trial,method,rot_err_deg,dir_err_deg then one line per row.
void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out);

/// Median of the finite-or-failed errors; failures count as +infinity.
double median_error(std::vector<double> errors);

/// Worker count from ACRKIT_THREADS, else hardware concurrency (at least 1).
std::size_t default_thread_count();

}  // namespace acrkit
