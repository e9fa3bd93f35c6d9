#include "acrkit/io.hpp"

#include <fstream>
#include <random>
#include <string>

#include "acrkit/error.hpp"
#include "acrkit/ransac.hpp"

namespace acrkit {
namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::kConfig, what); }

double number(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) bad(std::string("expected number \"") + key + "\"");
  return j[key].get<double>();
}

double number_or(const Json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j, key) : fallback;
}

Vec3 vec3(const Json& j) {
  if (!j.is_array() || j.size() != 3) bad("expected a 3-vector");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) bad("expected a 3-vector of numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

Vec2 vec2(const Json& j) {
  if (!j.is_array() || j.size() != 2) bad("expected a 2-vector");
  return {j[0].get<double>(), j[1].get<double>()};
}

Json vec_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Rotation rotation_from(const Json& j) {
  if (!j.is_array() || j.size() != 9) bad("expected \"r\" with 9 row-major entries");
  Mat3 m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = j[i].get<double>();
  try {
    return Rotation::from_matrix(m);
  } catch (const Error& e) {
    bad(std::string("invalid rotation: ") + e.what());
  }
}

Json rotation_json(const Rotation& r) {
  Json a = Json::array();
  for (int i = 0; i < 9; ++i) a.push_back(r.matrix()(i / 3, i % 3));
  return a;
}

std::uint64_t uint_or(const Json& j, const char* key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer() || j[key].get<std::int64_t>() < 0) {
    bad(std::string("expected nonnegative integer \"") + key + "\"");
  }
  return j[key].get<std::uint64_t>();
}

// Pose, or {"random": {...}} drawn from rng.
Pose pose_or_random(const Json& j, std::mt19937_64& rng) {
  if (j.contains("random")) {
    const Json& r = j["random"];
    return random_pose(rng, number(r, "max_angle_deg"), number(r, "max_offset_m"));
  }
  return pose_from_json(j);
}

Json random_json(double angle, double offset) {
  return {{"random", {{"max_angle_deg", angle}, {"max_offset_m", offset}}}};
}

Json pose_schema() {
  return {{"oneOf",
           Json::array({{{"type", "object"},
                         {"required", {"r", "t"}},
                         {"properties",
                          {{"r", {{"type", "array"}, {"minItems", 9}, {"maxItems", 9}}},
                           {"t", {{"type", "array"}, {"minItems", 3}, {"maxItems", 3}}}}}},
                        {{"type", "object"},
                         {"required", {"random"}},
                         {"properties",
                          {{"random",
                            {{"type", "object"},
                             {"required", {"max_angle_deg", "max_offset_m"}}}}}}}})}};
}

Json scene_schema() {
  return {{"type", "object"},
          {"properties",
           {{"preset", {{"enum", {"acr-default", "bench-default"}}}},
            {"seed", {{"type", "integer"}}},
            {"planes",
             {{"type", "array"},
              {"items",
               {{"type", "object"},
                {"required", {"normal", "points"}},
                {"properties",
                 {{"normal", {{"type", "array"}}},
                  {"offset", {{"type", "number"}}},
                  {"polygon", {{"type", "array"}}},
                  {"center", {{"type", "array"}}},
                  {"half_extents", {{"type", "array"}}},
                  {"points", {{"type", "integer"}, {"minimum", 4}}}}}}}}},
            {"clutter",
             {{"type", "object"},
              {"properties",
               {{"count", {{"type", "integer"}}},
                {"min_depth_m", {{"type", "number"}}},
                {"max_depth_m", {{"type", "number"}}}}}}}}}};
}

Json camera_schema() {
  return {{"type", "object"},
          {"properties",
           {{"preset", {{"enum", {"canon-5d3", "canon-5d3-quarter"}}}},
            {"width", {{"type", "integer"}}},
            {"height", {{"type", "integer"}}},
            {"fx", {{"type", "number"}}},
            {"fy", {{"type", "number"}}},
            {"cx", {{"type", "number"}}},
            {"cy", {{"type", "number"}}}}}};
}

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingInput, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::kConfig, path.string() + ": " + e.what());
  }
}

Json to_json(const Pose& p) { return {{"r", rotation_json(p.rotation)}, {"t", vec_json(p.translation)}}; }

Pose pose_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("r") || !j.contains("t")) bad("pose needs \"r\" and \"t\"");
  return {rotation_from(j["r"]), vec3(j["t"])};
}

Json to_json(const DirectionalPose& p) {
  return {{"r", rotation_json(p.rotation())}, {"direction", vec_json(p.direction())}};
}

DirectionalPose directional_pose_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("r") || !j.contains("direction")) {
    bad("directional pose needs \"r\" and \"direction\"");
  }
  return {rotation_from(j["r"]), vec3(j["direction"])};
}

Json to_json(const Intrinsics& k) { return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}}; }

Intrinsics intrinsics_from_json(const Json& j) {
  Intrinsics k{number(j, "fx"), number(j, "fy"), number(j, "cx"), number(j, "cy")};
  k.validate();
  return k;
}

Json to_json(const CorrespondenceSet& c) {
  Json pairs = Json::array();
  for (std::size_t i = 0; i < c.size(); ++i) {
    pairs.push_back({c.a[i].u, c.a[i].v, c.b[i].u, c.b[i].v});
  }
  Json out{{"pairs", pairs}};
  if (!c.plane_label.empty()) {
    Json labels = Json::array();
    for (const auto& l : c.plane_label) labels.push_back(l ? Json(*l) : Json());
    out["plane_label"] = labels;
  }
  if (c.has_tracks()) out["track_id"] = c.track_id;
  return out;
}

CorrespondenceSet correspondences_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("pairs") || !j["pairs"].is_array()) {
    bad("correspondences need a \"pairs\" array");
  }
  CorrespondenceSet c;
  for (const Json& p : j["pairs"]) {
    if (!p.is_array() || p.size() != 4) bad("each pair is [uA, vA, uB, vB]");
    c.a.push_back({p[0].get<double>(), p[1].get<double>()});
    c.b.push_back({p[2].get<double>(), p[3].get<double>()});
  }
  if (j.contains("plane_label")) {
    for (const Json& l : j["plane_label"]) {
      c.plane_label.push_back(l.is_null() ? std::nullopt : std::optional<int>(l.get<int>()));
    }
  }
  if (j.contains("track_id")) c.track_id = j["track_id"].get<std::vector<TrackId>>();
  try {
    c.validate();
  } catch (const Error& e) {
    bad(e.what());
  }
  return c;
}

Json to_json(const SparseDepthMap& d) {
  Json out = Json::object();
  for (const auto& [k, v] : d) out[std::to_string(k)] = v;
  return out;
}

SparseDepthMap depth_map_from_json(const Json& j) {
  if (!j.is_object()) bad("depth map must be an object");
  SparseDepthMap d;
  for (const auto& [k, v] : j.items()) {
    try {
      d[std::stoll(k)] = v.get<double>();
    } catch (const std::exception&) {
      bad("depth map keys are track ids, values are depths");
    }
  }
  return d;
}

Json to_json(const Camera& c) {
  Json j = to_json(c.intrinsics);
  j["width"] = c.image.width;
  j["height"] = c.image.height;
  return j;
}

Camera camera_from_json(const Json& j) {
  if (j.contains("preset")) {
    const std::string p = j["preset"].get<std::string>();
    if (p == "canon-5d3") return Camera::canon_5d3();
    if (p == "canon-5d3-quarter") return Camera::canon_5d3_quarter();
    bad("unknown camera preset " + p);
  }
  Camera c;
  c.intrinsics = intrinsics_from_json(j);
  c.image = {static_cast<int>(number(j, "width")), static_cast<int>(number(j, "height"))};
  if (c.image.width <= 0 || c.image.height <= 0) bad("camera image size must be positive");
  return c;
}

Json to_json(const SceneSpec& s) {
  Json planes = Json::array();
  for (const PlaneSpec& p : s.planes) {
    Json poly = Json::array();
    for (const Vec2& v : p.polygon) poly.push_back({v.x(), v.y()});
    planes.push_back({{"normal", vec_json(p.normal)},
                      {"offset", p.offset},
                      {"polygon", poly},
                      {"points", p.point_count}});
  }
  return {{"planes", planes},
          {"clutter",
           {{"count", s.clutter.count},
            {"min_depth_m", s.clutter.min_depth_m},
            {"max_depth_m", s.clutter.max_depth_m}}},
          {"seed", s.seed}};
}

SceneSpec scene_from_json(const Json& j) {
  SceneSpec s;
  const std::uint64_t seed = uint_or(j, "seed", 0);
  if (j.contains("preset")) {
    const std::string p = j["preset"].get<std::string>();
    if (p == "acr-default") return default_acr_scene(seed);
    if (p == "bench-default") return default_bench_scene(seed);
    bad("unknown scene preset " + p);
  }
  s.seed = seed;
  if (!j.contains("planes") || !j["planes"].is_array()) bad("scene needs a \"planes\" array");
  for (const Json& pj : j["planes"]) {
    const auto count = static_cast<std::size_t>(uint_or(pj, "points", 0));
    if (!pj.contains("normal")) bad("plane needs a \"normal\"");
    if (pj.contains("center")) {
      s.planes.push_back(PlaneSpec::rectangle(vec3(pj["normal"]), vec3(pj["center"]),
                                              vec2(pj["half_extents"]), count));
      continue;
    }
    PlaneSpec p;
    p.normal = vec3(pj["normal"]);
    p.offset = number(pj, "offset");
    p.point_count = count;
    if (!pj.contains("polygon") || !pj["polygon"].is_array()) bad("plane needs a \"polygon\"");
    for (const Json& v : pj["polygon"]) p.polygon.push_back(vec2(v));
    s.planes.push_back(std::move(p));
  }
  if (j.contains("clutter")) {
    const Json& c = j["clutter"];
    s.clutter.count = static_cast<std::size_t>(uint_or(c, "count", 0));
    s.clutter.min_depth_m = number_or(c, "min_depth_m", s.clutter.min_depth_m);
    s.clutter.max_depth_m = number_or(c, "max_depth_m", s.clutter.max_depth_m);
  }
  s.validate();
  return s;
}

SimulationConfig simulation_config_from_json(const Json& j, std::uint64_t seed_override,
                                             bool override_seed) {
  if (!j.is_object()) bad("config must be a JSON object");
  try {
    SimulationConfig c;
    c.seed = override_seed ? seed_override : uint_or(j, "seed", 0);
    c.scene = j.contains("scene") ? scene_from_json(j["scene"]) : default_acr_scene();
    if (!j.contains("scene") || !j["scene"].contains("seed")) c.scene.seed = mix_seed(c.seed, 100);
    c.camera = j.contains("camera") ? camera_from_json(j["camera"]) : Camera::canon_5d3_quarter();
    std::mt19937_64 rx(mix_seed(c.seed, 101)), ro(mix_seed(c.seed, 102));
    c.hand_eye = pose_or_random(j.value("hand_eye", random_json(30.0, 0.1)), rx);
    c.initial_offset = pose_or_random(j.value("initial_offset", random_json(5.0, 0.05)), ro);
    if (j.contains("noise")) {
      c.noise = {number_or(j["noise"], "r", 0.0), number_or(j["noise"], "mu", 0.0)};
    }
    if (j.contains("lighting")) {
      const Json& l = j["lighting"];
      c.lighting = {number_or(l, "off_plane", 0.0), number_or(l, "in_plane", 0.0),
                    number_or(l, "dropout", 0.0)};
    }
    if (j.contains("acr")) {
      const Json& a = j["acr"];
      c.acr.scale_epsilon_m = number_or(a, "scale_epsilon_m", c.acr.scale_epsilon_m);
      c.acr.rotation_epsilon_deg = number_or(a, "rotation_epsilon_deg", c.acr.rotation_epsilon_deg);
      c.acr.max_iterations = static_cast<std::size_t>(uint_or(a, "max_iterations", c.acr.max_iterations));
      if (a.contains("init_translation")) c.acr.init_translation = vec3(a["init_translation"]);
      c.acr.i2pe.erosion_radius = static_cast<int>(number_or(a, "erosion_radius", c.acr.i2pe.erosion_radius));
      c.acr.i2pe.ransac.threshold_px = number_or(a, "ransac_threshold_px", c.acr.i2pe.ransac.threshold_px);
      c.acr.epipolar.ransac.threshold_px = c.acr.i2pe.ransac.threshold_px;
      if (a.contains("fusion")) {
        const std::string f = a["fusion"].get<std::string>();
        if (f == "weighted-mean") c.acr.i2pe.fusion = FusionMode::kWeightedMean;
        else if (f == "winner-take-all") c.acr.i2pe.fusion = FusionMode::kWinnerTakeAll;
        else bad("unknown fusion mode " + f);
      }
    }
    c.acr.seed = mix_seed(c.seed, 103);
    c.noise.validate();
    c.lighting.validate();
    c.acr.validate();
    return c;
  } catch (const Json::exception& e) {
    bad(e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    bad(e.what());
  }
}

Json simulation_config_schema() {
  return {{"$schema", "https://json-schema.org/draft/2020-12/schema"},
          {"title", "acrkit simulate-acr config"},
          {"type", "object"},
          {"properties",
           {{"seed", {{"type", "integer"}, {"minimum", 0}}},
            {"scene", scene_schema()},
            {"camera", camera_schema()},
            {"hand_eye", pose_schema()},
            {"initial_offset", pose_schema()},
            {"noise",
             {{"type", "object"},
              {"properties", {{"r", {{"type", "number"}}}, {"mu", {{"type", "number"}}}}}}},
            {"lighting",
             {{"type", "object"},
              {"properties",
               {{"off_plane", {{"type", "number"}}},
                {"in_plane", {{"type", "number"}}},
                {"dropout", {{"type", "number"}}}}}}},
            {"acr",
             {{"type", "object"},
              {"properties",
               {{"scale_epsilon_m", {{"type", "number"}, {"default", 1e-3}}},
                {"rotation_epsilon_deg", {{"type", "number"}, {"default", 0.02}}},
                {"max_iterations", {{"type", "integer"}, {"default", 30}}},
                {"init_translation", {{"type", "array"}, {"default", {0.0, 0.0, 0.05}}}},
                {"erosion_radius", {{"type", "integer"}, {"default", 5}}},
                {"ransac_threshold_px", {{"type", "number"}, {"default", 1.0}}},
                {"fusion", {{"enum", {"weighted-mean", "winner-take-all"}}}}}}}}}}};
}

Pose default_bench_motion() {
  return {Rotation::rx_deg(1.0) * Rotation::ry_deg(-2.0) * Rotation::rz_deg(1.5),
          Vec3(0.10, -0.03, 0.02)};
}

BenchConfig bench_config_from_json(const Json& j, std::uint64_t seed_override,
                                   bool override_seed) {
  if (!j.is_object()) bad("config must be a JSON object");
  try {
    BenchConfig c;
    c.seed = override_seed ? seed_override : uint_or(j, "seed", 0);
    c.scene = j.contains("scene") ? scene_from_json(j["scene"]) : default_bench_scene();
    if (!j.contains("scene") || !j["scene"].contains("seed")) c.scene.seed = mix_seed(c.seed, 100);
    c.camera = j.contains("camera") ? camera_from_json(j["camera"]) : Camera::canon_5d3();
    c.motion = j.contains("motion") ? pose_from_json(j["motion"]) : default_bench_motion();
    if (j.contains("r_values")) {
      c.r_values = j["r_values"].get<std::vector<double>>();
    } else {
      for (int r = 0; r <= 50; r += 2) c.r_values.push_back(r);
    }
    c.mu_values = j.contains("mu_values") ? j["mu_values"].get<std::vector<double>>()
                                          : std::vector<double>{0.01, 0.1, 0.3, 0.5, 0.8, 0.9};
    c.trials = static_cast<std::size_t>(uint_or(j, "trials", c.trials));
    c.ransac.threshold_px = number_or(j, "ransac_threshold_px", c.ransac.threshold_px);
    c.ransac.max_iterations =
        static_cast<std::size_t>(uint_or(j, "ransac_max_iterations", c.ransac.max_iterations));
    if (c.trials < 1) bad("trials must be >= 1");
    for (double r : c.r_values) NoiseSpec{r, 0.0}.validate();
    for (double mu : c.mu_values) NoiseSpec{0.0, mu}.validate();
    return c;
  } catch (const Json::exception& e) {
    bad(e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    bad(e.what());
  }
}

Json bench_config_schema() {
  return {{"$schema", "https://json-schema.org/draft/2020-12/schema"},
          {"title", "acrkit bench-noise config"},
          {"type", "object"},
          {"properties",
           {{"seed", {{"type", "integer"}, {"minimum", 0}}},
            {"scene", scene_schema()},
            {"camera", camera_schema()},
            {"motion",
             {{"type", "object"},
              {"required", {"r", "t"}}}},
            {"r_values", {{"type", "array"}, {"items", {{"type", "number"}, {"minimum", 0}}}}},
            {"mu_values",
             {{"type", "array"},
              {"items", {{"type", "number"}, {"minimum", 0}, {"maximum", 1}}}}},
            {"trials", {{"type", "integer"}, {"minimum", 1}, {"default", 20}}},
            {"ransac_threshold_px", {{"type", "number"}, {"default", 1.0}}},
            {"ransac_max_iterations", {{"type", "integer"}, {"default", 2000}}}}}};
}

Json acr_trace_summary(const AcrTrace& t) {
  const auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(); };
  Json j{{"status", acr_status_name(t.status)},
         {"iterations", t.iterations},
         {"final_rot_err_deg", opt(t.final_rot_err_deg)},
         {"final_trans_err_m", opt(t.final_trans_err_m)},
         {"final_afd_px", opt(t.final_afd_px)}};
  if (!t.failure.empty()) j["failure"] = t.failure;
  return j;
}

}  // namespace acrkit
