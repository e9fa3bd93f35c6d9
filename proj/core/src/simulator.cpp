#include "acrkit/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <string>
#include <thread>

#include "acrkit/error.hpp"
#include "acrkit/metrics.hpp"
#include "acrkit/ransac.hpp"

namespace acrkit {
namespace {

double polygon_area(const std::vector<Vec2>& p) {
  double a = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2& u = p[i];
    const Vec2& v = p[(i + 1) % p.size()];
    a += u.x() * v.y() - v.x() * u.y();
  }
  return 0.5 * a;
}

// Even-odd rule.
bool inside(const std::vector<Vec2>& p, double x, double y) {
  bool in = false;
  for (std::size_t i = 0, j = p.size() - 1; i < p.size(); j = i++) {
    if ((p[i].y() > y) != (p[j].y() > y) &&
        x < (p[j].x() - p[i].x()) * (y - p[i].y()) / (p[j].y() - p[i].y()) + p[i].x()) {
      in = !in;
    }
  }
  return in;
}

bool in_image(const PixelPoint& q, const ImageSize& im) {
  const double x = std::floor(q.u + 0.5);
  const double y = std::floor(q.v + 0.5);
  return x >= 0.0 && y >= 0.0 && x < im.width && y < im.height;
}

}  // namespace

PlaneSpec PlaneSpec::rectangle(const Vec3& normal, const Vec3& center, const Vec2& half_extents,
                               std::size_t point_count) {
  PlaneSpec p;
  p.normal = normal.normalized();
  p.offset = p.normal.dot(center);
  p.point_count = point_count;
  const Vec3 rel = center - p.offset * p.normal;
  const Vec2 c(rel.dot(p.e1()), rel.dot(p.e2()));
  const double hx = half_extents.x(), hy = half_extents.y();
  p.polygon = {c + Vec2(-hx, -hy), c + Vec2(hx, -hy), c + Vec2(hx, hy), c + Vec2(-hx, hy)};
  return p;
}

Vec3 PlaneSpec::e1() const {
  Vec3 e = Vec3::UnitX() - normal.x() * normal;
  if (e.norm() < 1e-6) e = Vec3::UnitY() - normal.y() * normal;
  return e.normalized();
}

Vec3 PlaneSpec::e2() const { return normal.cross(e1()); }

Vec3 PlaneSpec::to_world(const Vec2& p) const {
  return offset * normal + p.x() * e1() + p.y() * e2();
}

void SceneSpec::validate() const {
  for (std::size_t i = 0; i < planes.size(); ++i) {
    const PlaneSpec& p = planes[i];
    const std::string which = "plane " + std::to_string(i + 1);
    if (std::abs(p.normal.norm() - 1.0) > 1e-9) {
      throw Error(ErrorKind::kInvalidScene, which + ": normal is not unit");
    }
    if (!(p.offset > 0.0)) throw Error(ErrorKind::kInvalidScene, which + ": offset must be > 0");
    if (p.polygon.size() < 3 || std::abs(polygon_area(p.polygon)) < 1e-12) {
      throw Error(ErrorKind::kInvalidScene, which + ": degenerate polygon");
    }
    if (p.point_count < 4) throw Error(ErrorKind::kInvalidScene, which + ": needs >= 4 points");
  }
  if (clutter.count > 0 && !(clutter.min_depth_m > 0.0 && clutter.max_depth_m >= clutter.min_depth_m)) {
    throw Error(ErrorKind::kInvalidScene, "clutter depth range is invalid");
  }
}

Camera Camera::canon_5d3() { return {{5600.0, 5600.0, 2880.0, 1920.0}, {5760, 3840}}; }

Camera Camera::canon_5d3_quarter() { return {{1400.0, 1400.0, 720.0, 480.0}, {1440, 960}}; }

World generate_scene(const SceneSpec& spec, const Camera& camera) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  World w;
  w.planes = spec.planes;
  TrackId next = 0;
  for (std::size_t k = 0; k < spec.planes.size(); ++k) {
    const PlaneSpec& p = spec.planes[k];
    Vec2 lo = p.polygon[0], hi = p.polygon[0];
    for (const Vec2& v : p.polygon) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    for (std::size_t n = 0; n < p.point_count;) {
      const Vec2 s(lo.x() + (hi.x() - lo.x()) * unit(rng), lo.y() + (hi.y() - lo.y()) * unit(rng));
      if (!inside(p.polygon, s.x(), s.y())) continue;
      w.points.push_back({p.to_world(s), static_cast<int>(k + 1), next++});
      ++n;
    }
  }
  if (spec.clutter.count == 0) return w;
  if (camera.image.width <= 0 || camera.image.height <= 0) {
    throw Error(ErrorKind::kInvalidScene, "clutter needs a camera to place points");
  }
  camera.intrinsics.validate();
  const PlaneSegmentMap labels = render_plane_labels(w, Pose::identity(), camera);
  const std::size_t budget = 1000 * spec.clutter.count;
  std::size_t placed = 0;
  for (std::size_t tries = 0; placed < spec.clutter.count; ++tries) {
    if (tries > budget) throw Error(ErrorKind::kInvalidScene, "no background left for clutter");
    const PixelPoint q{camera.image.width * unit(rng) - 0.5, camera.image.height * unit(rng) - 0.5};
    const double depth = spec.clutter.min_depth_m +
                         (spec.clutter.max_depth_m - spec.clutter.min_depth_m) * unit(rng);
    if (labels.label_at(q) != 0) continue;
    w.points.push_back({back_project(camera.intrinsics, Pose::identity(), q, depth), 0, next++});
    ++placed;
  }
  return w;
}

namespace {

struct ProjectedPolygon {
  double depth = 0.0;
  int label = 0;
  std::vector<Vec2> px;
};

// Planes in front of the camera, sorted far to near (painting order).
std::vector<ProjectedPolygon> project_planes(const World& world, const Pose& camera_pose,
                                             const Camera& camera) {
  std::vector<ProjectedPolygon> polys;
  for (std::size_t k = 0; k < world.planes.size(); ++k) {
    const PlaneSpec& p = world.planes[k];
    ProjectedPolygon poly{0.0, static_cast<int>(k + 1), {}};
    bool front = true;
    for (const Vec2& v : p.polygon) {
      const Vec3 x = camera_pose.apply(p.to_world(v));
      if (!(x.z() > 1e-9)) {
        front = false;
        break;
      }
      const PixelPoint q = project(camera.intrinsics, Pose::identity(), x);
      poly.px.emplace_back(q.u, q.v);
      poly.depth += x.z() / static_cast<double>(p.polygon.size());
    }
    if (front) polys.push_back(std::move(poly));
  }
  std::stable_sort(polys.begin(), polys.end(), [](const ProjectedPolygon& a,
                                                  const ProjectedPolygon& b) {
    return a.depth > b.depth;
  });
  return polys;
}

// Label painted at pixel (x, y): the nearest polygon containing its center.
int label_at_pixel(const std::vector<ProjectedPolygon>& polys, int x, int y) {
  for (auto it = polys.rbegin(); it != polys.rend(); ++it) {
    if (inside(it->px, x, y)) return it->label;
  }
  return 0;
}

}  // namespace

PlaneSegmentMap render_plane_labels(const World& world, const Pose& camera_pose,
                                    const Camera& camera) {
  const ImageSize im = camera.image;
  PlaneSegmentMap out(im.width, im.height);
  std::vector<double> cross;
  for (const ProjectedPolygon& poly : project_planes(world, camera_pose, camera)) {
    const std::vector<Vec2>& p = poly.px;
    double lo = p[0].y(), hi = p[0].y();
    for (const Vec2& v : p) {
      lo = std::min(lo, v.y());
      hi = std::max(hi, v.y());
    }
    const int y0 = std::max(0, static_cast<int>(std::floor(lo)));
    const int y1 = std::min(im.height - 1, static_cast<int>(std::ceil(hi)));
    for (int y = y0; y <= y1; ++y) {
      // Same crossing test as inside(), so spans agree with it pixel for pixel.
      cross.clear();
      for (std::size_t i = 0, j = p.size() - 1; i < p.size(); j = i++) {
        if ((p[i].y() > y) != (p[j].y() > y)) {
          cross.push_back((p[j].x() - p[i].x()) * (y - p[i].y()) / (p[j].y() - p[i].y()) + p[i].x());
        }
      }
      std::sort(cross.begin(), cross.end());
      for (std::size_t k = 0; k + 1 < cross.size(); k += 2) {
        const int xa = std::max(0, static_cast<int>(std::ceil(cross[k])));
        const int xb = std::min(im.width, static_cast<int>(std::ceil(cross[k + 1])));
        for (int x = xa; x < xb; ++x) out.set(x, y, static_cast<PlaneSegmentMap::Label>(poly.label));
      }
    }
  }
  return out;
}

View render_view(const World& world, const Pose& camera_pose, const Camera& camera,
                 bool with_mask) {
  View v;
  if (with_mask) {
    const PlaneSegmentMap raw = render_plane_labels(world, camera_pose, camera);
    const auto hist = raw.histogram();
    for (std::size_t id = 1; id < hist.size(); ++id) {
      if (hist[id] > 0) v.mask_planes.push_back(static_cast<int>(id));
    }
    v.mask = raw.compacted();
  }
  const auto polys = project_planes(world, camera_pose, camera);
  v.pixels.resize(world.points.size());
  v.depths.resize(world.points.size());
  for (std::size_t i = 0; i < world.points.size(); ++i) {
    const WorldPoint& p = world.points[i];
    const Vec3 x = camera_pose.apply(p.position);
    v.depths[i] = x.z();
    if (!(x.z() > 1e-9)) continue;
    const PixelPoint q = project(camera.intrinsics, Pose::identity(), x);
    if (!in_image(q, camera.image)) continue;
    const int px = static_cast<int>(std::floor(q.u + 0.5));
    const int py = static_cast<int>(std::floor(q.v + 0.5));
    if (label_at_pixel(polys, px, py) != p.plane) continue;
    v.pixels[i] = q;
  }
  return v;
}

void NoiseSpec::validate() const {
  if (!(magnitude_r >= 0.0)) throw Error(ErrorKind::kConfig, "noise magnitude must be >= 0");
  if (!(ratio_mu >= 0.0 && ratio_mu <= 1.0)) {
    throw Error(ErrorKind::kConfig, "noise ratio must lie in [0, 1]");
  }
}

void LightingProxySpec::validate() const {
  for (double f : {off_plane_outlier_fraction, in_plane_outlier_fraction, dropout_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) throw Error(ErrorKind::kConfig, "lighting fractions must lie in [0, 1]");
  }
  if (in_plane_outlier_fraction > off_plane_outlier_fraction) {
    throw Error(ErrorKind::kConfig, "in-plane contamination cannot exceed off-plane");
  }
}

SimObservation observe(const World& world, const View& reference, const Pose& camera_pose,
                       const Camera& camera, const NoiseSpec& noise,
                       const LightingProxySpec& lighting, std::uint64_t seed, bool with_mask) {
  noise.validate();
  lighting.validate();
  const View cur = render_view(world, camera_pose, camera, with_mask);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::size_t> visible;
  for (std::size_t i = 0; i < cur.pixels.size(); ++i) {
    if (cur.pixels[i]) visible.push_back(i);
  }
  std::vector<PixelPoint> kp(visible.size());
  for (std::size_t k = 0; k < visible.size(); ++k) kp[k] = *cur.pixels[visible[k]];
  const auto noisy = static_cast<std::size_t>(
      std::llround(noise.ratio_mu * static_cast<double>(visible.size())));
  if (noisy > 0 && noise.magnitude_r > 0.0) {
    // Partial Fisher-Yates picks exactly `noisy` distinct keypoints.
    std::vector<std::size_t> order(visible.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    for (std::size_t k = 0; k < noisy; ++k) {
      std::swap(order[k], order[k + static_cast<std::size_t>(rng() % (order.size() - k))]);
    }
    std::uniform_real_distribution<double> u(-noise.magnitude_r, noise.magnitude_r);
    for (std::size_t k = 0; k < noisy; ++k) {
      kp[order[k]].u += u(rng);
      kp[order[k]].v += u(rng);
    }
  }

  SimObservation out;
  out.mask_planes = cur.mask_planes;
  out.obs.mask = cur.mask;
  for (std::size_t k = 0; k < visible.size(); ++k) {
    out.obs.keypoints.push_back(kp[k]);
    out.obs.keypoint_tracks.push_back(world.points[visible[k]].track);
  }
  const bool lit = lighting.active();
  for (std::size_t k = 0; k < visible.size(); ++k) {
    const std::size_t i = visible[k];
    if (!reference.pixels[i]) continue;
    const WorldPoint& p = world.points[i];
    PixelPoint b = kp[k];
    bool bad = false;
    if (lit) {
      if (unit(rng) < lighting.dropout_fraction) continue;
      const double rate = p.plane > 0 ? lighting.in_plane_outlier_fraction
                                      : lighting.off_plane_outlier_fraction;
      if (unit(rng) < rate) {
        b = {camera.image.width * unit(rng) - 0.5, camera.image.height * unit(rng) - 0.5};
        bad = true;
      }
    }
    out.obs.matches.add(*reference.pixels[i], b,
                        p.plane > 0 ? std::optional<int>(p.plane) : std::nullopt, p.track);
    out.depth_ref.push_back(reference.depths[i]);
    out.depth_cur.push_back(cur.depths[i]);
    out.clean_cur.push_back(*cur.pixels[i]);
    out.contaminated.push_back(bad);
  }
  if (out.obs.matches.empty()) {
    throw Error(ErrorKind::kEmptyObservation, "no track is visible in both views");
  }
  return out;
}

SimObservation observe(const World& world, const Pose& camera_pose, const Camera& camera,
                       const NoiseSpec& noise, const LightingProxySpec& lighting,
                       std::uint64_t seed, bool with_mask) {
  return observe(world, render_view(world, Pose::identity(), camera, false), camera_pose, camera,
                 noise, lighting, seed, with_mask);
}

Pose camera_motion(const Pose& hand_eye, const Pose& hand_motion) {
  return compose(hand_eye, compose(hand_motion, invert(hand_eye)));
}

SimulatedExecutor::SimulatedExecutor(World world, RigSpec rig, const Pose& initial_offset,
                                     NoiseSpec noise, LightingProxySpec lighting,
                                     std::uint64_t seed)
    : world_(std::move(world)),
      rig_(std::move(rig)),
      pose_(initial_offset),
      noise_(noise),
      lighting_(lighting),
      seed_(seed) {
  rig_.camera.intrinsics.validate();
  noise_.validate();
  lighting_.validate();
  reference_ = render_view(world_, Pose::identity(), rig_.camera);
}

Observation SimulatedExecutor::observe() {
  last_ = acrkit::observe(world_, reference_, pose_, rig_.camera, noise_, lighting_,
                          mix_seed(seed_, captures_++));
  return last_.obs;
}

Observation SimulatedExecutor::execute(const Pose& hand_motion) {
  pose_ = compose(camera_motion(rig_.hand_eye, hand_motion), pose_);
  ++motions_;
  return observe();
}

std::optional<AfdReport> SimulatedExecutor::residual_afd() const {
  const View cur = render_view(world_, pose_, rig_.camera, false);
  std::vector<PixelPoint> a, b;
  for (std::size_t i = 0; i < cur.pixels.size(); ++i) {
    if (cur.pixels[i] && reference_.pixels[i]) {
      a.push_back(*reference_.pixels[i]);
      b.push_back(*cur.pixels[i]);
    }
  }
  if (a.empty()) return std::nullopt;
  return afd(a, b);
}

Pose random_pose(std::mt19937_64& rng, double max_angle_deg, double max_offset_m) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec3 axis;
  do {
    axis = Vec3(g(rng), g(rng), g(rng));
  } while (axis.norm() < 1e-9);
  const double angle = deg2rad(max_angle_deg * unit(rng));
  Vec3 dir;
  do {
    dir = Vec3(g(rng), g(rng), g(rng));
  } while (dir.norm() < 1e-9);
  const double radius = max_offset_m * std::cbrt(unit(rng));
  return {Rotation::from_axis_angle(axis.normalized(), angle), radius * dir.normalized()};
}

SceneSpec default_acr_scene(std::uint64_t seed) {
  SceneSpec s;
  s.planes.push_back(PlaneSpec::rectangle(Vec3(0.0, 0.0, 1.0), Vec3(-0.12, -0.02, 0.60),
                                          Vec2(0.10, 0.13), 400));
  s.planes.push_back(PlaneSpec::rectangle(Vec3(-0.6, 0.0, 1.0), Vec3(0.13, -0.06, 0.52),
                                          Vec2(0.09, 0.08), 300));
  s.planes.push_back(PlaneSpec::rectangle(Vec3(0.0, -0.8, 1.0), Vec3(0.10, 0.11, 0.48),
                                          Vec2(0.09, 0.05), 300));
  s.clutter = {300, 0.35, 0.9};
  s.seed = seed;
  return s;
}

SceneSpec default_bench_scene(std::uint64_t seed) {
  SceneSpec s;
  s.planes.push_back(PlaneSpec::rectangle(Vec3(0.1, -0.1, 1.0), Vec3(0.0, 0.0, 1.0),
                                          Vec2(0.40, 0.26), 1000));
  s.seed = seed;
  return s;
}

std::string_view bench_method_name(BenchMethod m) {
  return m == BenchMethod::kDeH ? "de-h" : "epipolar";
}

std::size_t default_thread_count() {
  if (const char* env = std::getenv("ACRKIT_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<BenchRow> bench_noise_sweep(const World& world, const Camera& camera,
                                        const Pose& motion, const std::vector<double>& r_values,
                                        const std::vector<double>& mu_values, std::size_t trials,
                                        std::uint64_t seed, const BenchOptions& opts) {
  const View reference = render_view(world, Pose::identity(), camera, false);
  const std::size_t jobs = r_values.size() * mu_values.size() * trials;
  std::vector<BenchRow> rows(2 * jobs);
  constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

  const auto run = [&](std::size_t job) {
    const std::size_t trial = job % trials;
    const std::size_t mi = (job / trials) % mu_values.size();
    const std::size_t ri = job / (trials * mu_values.size());
    const std::uint64_t js = mix_seed(seed, job);
    const NoiseSpec noise{r_values[ri], mu_values[mi]};
    BenchRow deh{r_values[ri], mu_values[mi], trial, BenchMethod::kDeH, kNan, kNan};
    BenchRow epi = deh;
    epi.method = BenchMethod::kEpipolar;
    try {
      const SimObservation so = observe(world, reference, motion, camera, noise, {}, js, false);
      const CorrespondenceSet& c = so.obs.matches;
      const auto record = [&](BenchRow& row, const DirectionalPose& est) {
        const PoseError e = pose_error(est, motion);
        row.rot_err_deg = e.rotation_deg;
        row.dir_err_deg = e.direction_deg.value_or(kNan);
      };
      try {
        RansacOptions ro = opts.ransac;
        ro.seed = mix_seed(js, 1);
        const HomographyEstimate he = estimate_homography_ransac(c, camera.intrinsics, ro);
        std::vector<std::size_t> in;
        for (std::size_t i = 0; i < c.size(); ++i) {
          if (he.inlier_mask[i]) in.push_back(i);
        }
        record(deh, decompose_homography(he.homography, camera.intrinsics, c.subset(in)).pose);
      } catch (const Error&) {
      }
      try {
        EpipolarOptions eo;
        eo.ransac = opts.ransac;
        eo.ransac.seed = mix_seed(js, 2);
        record(epi, estimate_epipolar(c, camera.intrinsics, eo).pose);
      } catch (const Error&) {
      }
    } catch (const Error&) {
    }
    rows[2 * job] = deh;
    rows[2 * job + 1] = epi;
  };

  const std::size_t n_threads = std::min(opts.threads > 0 ? opts.threads : default_thread_count(),
                                         std::max<std::size_t>(jobs, 1));
  if (n_threads <= 1) {
    for (std::size_t j = 0; j < jobs; ++j) run(j);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) {
    pool.emplace_back([&]() {
      for (std::size_t j = next++; j < jobs; j = next++) run(j);
    });
  }
  for (auto& th : pool) th.join();
  return rows;
}

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
  const auto num = [](double v) {
    if (!std::isfinite(v)) return std::string("nan");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  out << "r,mu,trial,method,rot_err_deg,dir_err_deg\n";
  for (const BenchRow& r : rows) {
    out << num(r.r) << ',' << num(r.mu) << ',' << r.trial << ',' << bench_method_name(r.method)
        << ',' << num(r.rot_err_deg) << ',' << num(r.dir_err_deg) << '\n';
  }
}

double median_error(std::vector<double> errors) {
  if (errors.empty()) return std::numeric_limits<double>::quiet_NaN();
  for (double& e : errors) {
    if (!std::isfinite(e)) e = std::numeric_limits<double>::infinity();
  }
  std::sort(errors.begin(), errors.end());
  const std::size_t n = errors.size();
  return n % 2 ? errors[n / 2] : 0.5 * (errors[n / 2 - 1] + errors[n / 2]);
}

}  // namespace acrkit
