#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <vector>

#include "acrkit/acr_loop.hpp"
#include "acrkit/correspondence.hpp"
#include "acrkit/geometry.hpp"
#include "acrkit/scale_solver.hpp"
#include "acrkit/simulator.hpp"

namespace acrkit {

using Json = nlohmann::json;

/// Parses a JSON file. Throws missing-input when it cannot be opened and
/// config when it does not parse.
Json read_json_file(const std::filesystem::path& path);

// {"r": [9, row-major], "t": [3]}
Json to_json(const Pose& p);
Pose pose_from_json(const Json& j);

// {"r": [9], "direction": [3]}
Json to_json(const DirectionalPose& p);
DirectionalPose directional_pose_from_json(const Json& j);

// {"fx", "fy", "cx", "cy"}
Json to_json(const Intrinsics& k);
Intrinsics intrinsics_from_json(const Json& j);

// {"pairs": [[uA, vA, uB, vB], ...], "plane_label": [int|null, ...],
//  "track_id": [int, ...]}; the last two are optional.
Json to_json(const CorrespondenceSet& c);
CorrespondenceSet correspondences_from_json(const Json& j);

// {"<track id>": depth_m, ...}
Json to_json(const SparseDepthMap& d);
SparseDepthMap depth_map_from_json(const Json& j);

Json to_json(const Camera& c);
/// {"preset": "canon-5d3" | "canon-5d3-quarter"} or explicit
/// {"width", "height", "fx", "fy", "cx", "cy"}.
Camera camera_from_json(const Json& j);

Json to_json(const SceneSpec& s);
/// {"preset": "acr-default" | "bench-default", "seed"} or explicit
/// {"planes": [...], "clutter": {...}, "seed"}. A plane is either
/// {"normal", "offset", "polygon": [[x, y], ...], "points"} or the rectangle
/// form {"normal", "center", "half_extents", "points"}.
SceneSpec scene_from_json(const Json& j);

/// Inputs of one simulated relocalization run.
struct SimulationConfig {
  SceneSpec scene;
  Camera camera;
  Pose hand_eye;
  Pose initial_offset;
  NoiseSpec noise;
  LightingProxySpec lighting;
  AcrConfig acr;
  std::uint64_t seed = 0;
};

/// Missing keys take defaults: the default ACR scene on the quarter-resolution
/// camera, hand-eye drawn at random up to 30 deg / 0.1 m, initial offset up to
/// 5 deg / 0.05 m, no noise, no lighting change. Random poses are written as
/// {"random": {"max_angle_deg", "max_offset_m"}} and drawn from `seed`.
SimulationConfig simulation_config_from_json(const Json& j, std::uint64_t seed_override = 0,
                                             bool override_seed = false);
Json simulation_config_schema();

struct BenchConfig {
  SceneSpec scene;
  Camera camera;
  Pose motion;
  std::vector<double> r_values;
  std::vector<double> mu_values;
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  RansacOptions ransac;
};

/// Defaults: one 1000-point plane, the full-resolution camera, r = 0..50
/// step 2, mu in {0.01, 0.1, 0.3, 0.5, 0.8, 0.9}, 20 trials.
BenchConfig bench_config_from_json(const Json& j, std::uint64_t seed_override = 0,
                                   bool override_seed = false);
Json bench_config_schema();

/// The relative motion used by the default noise benchmark.
Pose default_bench_motion();

Json acr_trace_summary(const AcrTrace& t);

}  // namespace acrkit
