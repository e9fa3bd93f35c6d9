#include <acrkit/acr_loop.hpp>
#include <acrkit/error.hpp>
#include <acrkit/fusion.hpp>
#include <acrkit/io.hpp>
#include <acrkit/metrics.hpp>
#include <acrkit/plane_map.hpp>
#include <acrkit/plane_match.hpp>
#include <acrkit/pose_estimation.hpp>
#include <acrkit/scale_solver.hpp>
#include <acrkit/simulator.hpp>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace acrkit;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

Json error_json(std::string_view kind, const std::string& message) {
  return {{"error", kind}, {"message", message}};
}

// Writes `text` to `path`, or stdout when the path is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kConfig, "cannot write " + path);
  out << text;
}

Intrinsics load_intrinsics(const std::string& spec) {
  if (spec == "canon-5d3" || spec == "canon-5d3-quarter") {
    return camera_from_json(Json{{"preset", spec}}).intrinsics;
  }
  const Json j = read_json_file(spec);
  return j.contains("width") || j.contains("preset") ? camera_from_json(j).intrinsics
                                                     : intrinsics_from_json(j);
}

Json hypothesis_json(const PoseHypothesis& h) {
  Json j{{"pose", to_json(h.pose)},
         {"plane_normal", {h.plane_normal.x(), h.plane_normal.y(), h.plane_normal.z()}},
         {"support", h.support},
         {"spread", h.spread},
         {"weight", hypothesis_weight(h)},
         {"zero_motion", h.zero_motion},
         {"median_parallax_px", h.median_parallax_px},
         {"planar_degeneracy", h.planar_degeneracy}};
  return j;
}

Json matching_json(const PlaneMatchResult& m) {
  Json pairs = Json::array();
  for (const PlaneMatch& p : m.pairs) {
    pairs.push_back({{"ref_id", p.ref_id}, {"cur_id", p.cur_id}, {"shared", p.shared}});
  }
  return {{"pairs", pairs}, {"objective", m.objective}, {"exact", m.exact},
          {"transposed", m.transposed}};
}

// ---- estimate-pose --------------------------------------------------------

struct EstimateArgs {
  std::string correspondences;
  std::string ref_mask;
  std::string cur_mask;
  std::string intrinsics = "canon-5d3-quarter";
  std::string method = "i2pe";
  std::string out;
  double threshold_px = 1.0;
  int erosion = 5;
  std::uint64_t seed = 0;
};

int cmd_estimate_pose(const EstimateArgs& a) {
  const CorrespondenceSet c = correspondences_from_json(read_json_file(a.correspondences));
  const Intrinsics k = load_intrinsics(a.intrinsics);
  RansacOptions ransac;
  ransac.threshold_px = a.threshold_px;
  ransac.seed = a.seed;

  Json report{{"method", a.method}, {"correspondences", c.size()}};
  Json warnings = Json::array();
  DirectionalPose pose;
  if (a.method == "i2pe") {
    if (a.ref_mask.empty() || a.cur_mask.empty()) {
      throw Error(ErrorKind::kMissingInput, "i2pe needs --ref-mask and --cur-mask");
    }
    I2peConfig cfg;
    cfg.erosion_radius = a.erosion;
    cfg.ransac = ransac;
    const I2peResult r = i2pe(c, read_pgm(a.ref_mask), read_pgm(a.cur_mask), k, cfg);
    pose = r.pose;
    report["zero_motion"] = r.zero_motion;
    report["matching"] = matching_json(r.matching);
    Json hyps = Json::array();
    for (std::size_t i = 0; i < r.hypotheses.size(); ++i) {
      Json h = hypothesis_json(r.hypotheses[i]);
      h["fusion_weight"] = r.weights.w[i];
      if (i < r.matching.pairs.size()) {
        h["ref_id"] = r.matching.pairs[i].ref_id;
        h["cur_id"] = r.matching.pairs[i].cur_id;
      }
      hyps.push_back(h);
    }
    report["hypotheses"] = hyps;
    report["inliers"] = r.inliers.size();
  } else if (a.method == "epipolar" || a.method == "homography") {
    PoseHypothesis h;
    if (a.method == "epipolar") {
      EpipolarOptions eo;
      eo.ransac = ransac;
      h = estimate_epipolar(c, k, eo);
    } else {
      const HomographyEstimate he = estimate_homography_ransac(c, k, ransac);
      h = decompose_homography(he.homography, k, c);
    }
    pose = h.pose;
    report["zero_motion"] = h.zero_motion;
    report["hypotheses"] = Json::array({hypothesis_json(h)});
    report["inliers"] = h.inliers.size();
    if (h.planar_degeneracy) warnings.push_back("planar-degeneracy");
  } else {
    throw Error(ErrorKind::kConfig, "unknown method " + a.method);
  }
  report["warnings"] = warnings;
  for (const auto& w : warnings) std::cerr << "warning: " << w.get<std::string>() << '\n';
  emit(a.out, Json{{"pose", to_json(pose)}, {"report", report}}.dump(2) + "\n");
  return 0;
}

// ---- match-planes ---------------------------------------------------------

struct MatchArgs {
  std::string correspondences;
  std::string ref_mask;
  std::string cur_mask;
  std::string mode = "exact";
  int erosion = 0;
  double sigma_px = 0.0;
  std::string out;
};

int cmd_match_planes(const MatchArgs& a) {
  const CorrespondenceSet c = correspondences_from_json(read_json_file(a.correspondences));
  PlaneSegmentMap ref = read_pgm(a.ref_mask).compacted();
  PlaneSegmentMap cur = read_pgm(a.cur_mask).compacted();
  if (a.erosion > 0) {
    ref = erode_mask(ref, a.erosion);
    cur = erode_mask(cur, a.erosion);
  }
  MatchOptions opts;
  opts.sigma_px = a.sigma_px;
  if (a.mode == "spectral") opts.prefer_exact = false;
  else if (a.mode != "exact") throw Error(ErrorKind::kConfig, "unknown mode " + a.mode);
  const PlaneMatchResult m = match_planes(c, ref, cur, opts);
  Json j = matching_json(m);
  j["ref_planes"] = ref.plane_count();
  j["cur_planes"] = cur.plane_count();
  emit(a.out, j.dump(2) + "\n");
  return 0;
}

// ---- solve-scale ----------------------------------------------------------

struct ScaleArgs {
  std::string correspondences;
  std::string pose;
  std::string intrinsics = "canon-5d3-quarter";
  std::vector<double> init_translation;
  std::string ref_depths;
  std::string out;
};

int cmd_solve_scale(const ScaleArgs& a) {
  const CorrespondenceSet c = correspondences_from_json(read_json_file(a.correspondences));
  const DirectionalPose pose = directional_pose_from_json(read_json_file(a.pose));
  const Intrinsics k = load_intrinsics(a.intrinsics);
  const ScaleSolution sol = solve_nullspace(coefficient_blocks(c, k, pose));

  Json ratios = Json::array();
  for (std::size_t i = 0; i < sol.size(); ++i) ratios.push_back({sol.da(i), sol.db(i)});
  Json j{{"s", sol.s()},
         {"residual", sol.residual},
         {"sigma_min", sol.sigma_min},
         {"sigma_next", sol.sigma_next},
         {"depths", ratios}};
  if (!a.init_translation.empty()) {
    if (a.init_translation.size() != 3) {
      throw Error(ErrorKind::kConfig, "--init-translation takes three numbers");
    }
    const Vec3 t(a.init_translation[0], a.init_translation[1], a.init_translation[2]);
    const double s_init = init_scale(t, pose);
    j["scale_m"] = s_init;
    j["depth_map"] = to_json(depth_map_current(sol, s_init, c.track_id));
  }
  if (!a.ref_depths.empty()) {
    const SparseDepthMap d = depth_map_from_json(read_json_file(a.ref_depths));
    j["scale_m"] = iteration_scale(sol, d, c.track_id);
  }
  emit(a.out, j.dump(2) + "\n");
  return 0;
}

// ---- simulate-acr ---------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool baseline = false;
  bool omit_timing = false;
  std::string out_dir = ".";
  bool print_schema = false;
};

int cmd_simulate_acr(const SimulateArgs& a) {
  if (a.print_schema) {
    std::cout << simulation_config_schema().dump(2) << '\n';
    return 0;
  }
  const Json j = a.config.empty() ? Json::object() : read_json_file(a.config);
  const SimulationConfig cfg = simulation_config_from_json(j, a.seed.value_or(0), a.seed.has_value());
  SimulatedExecutor ex(generate_scene(cfg.scene, cfg.camera), {cfg.hand_eye, cfg.camera},
                       cfg.initial_offset, cfg.noise, cfg.lighting, mix_seed(cfg.seed, 104));

  const auto t0 = std::chrono::steady_clock::now();
  const AcrTrace trace = a.baseline ? run_bisection_baseline(ex, cfg.acr) : run_acr(ex, cfg.acr);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(a.out_dir);
  std::ostringstream jsonl;
  write_trace_jsonl(trace, jsonl);
  emit((fs::path(a.out_dir) / "trace.jsonl").string(), jsonl.str());

  const auto opt = [](const std::optional<double>& v) {
    if (!v) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", *v);
    return std::string(buf);
  };
  std::ostringstream csv;
  csv << "method,seed,status,iterations,motions,final_rot_err_deg,final_trans_err_m,final_afd_px,"
         "wall_time_s\n";
  csv << (a.baseline ? "bisection" : "acr") << ',' << cfg.seed << ',' << acr_status_name(trace.status)
      << ',' << trace.iterations << ',' << ex.motions() << ',' << opt(trace.final_rot_err_deg)
      << ',' << opt(trace.final_trans_err_m) << ',' << opt(trace.final_afd_px) << ','
      << (a.omit_timing ? std::string() : opt(wall)) << '\n';
  emit((fs::path(a.out_dir) / "summary.csv").string(), csv.str());

  Json summary = acr_trace_summary(trace);
  summary["method"] = a.baseline ? "bisection" : "acr";
  summary["seed"] = cfg.seed;
  summary["motions"] = ex.motions();
  std::cout << summary.dump() << '\n';
  return 0;
}

// ---- bench-noise ----------------------------------------------------------

struct BenchArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::string out;
  std::string summary;
  bool print_schema = false;
};

Json bench_summary(const std::vector<BenchRow>& rows, const BenchConfig& cfg) {
  std::map<std::pair<double, double>, std::pair<std::vector<double>, std::vector<double>>> by;
  for (const BenchRow& r : rows) {
    auto& cell = by[{r.mu, r.r}];
    (r.method == BenchMethod::kDeH ? cell.first : cell.second).push_back(r.rot_err_deg);
  }
  Json checks = Json::array();
  for (double mu : cfg.mu_values) {
    bool ordering = true;
    double worst_deh = 0.0;
    bool both_above_5 = true;
    Json cells = Json::array();
    for (double r : cfg.r_values) {
      const auto& cell = by[{mu, r}];
      const double deh = median_error(cell.first), epi = median_error(cell.second);
      cells.push_back({{"r", r}, {"deh_median_deg", deh}, {"epipolar_median_deg", epi}});
      if (r >= 2.0 && !(epi > deh)) ordering = false;
      worst_deh = std::max(worst_deh, deh);
      if (!(deh > 5.0 && epi > 5.0)) both_above_5 = false;
    }
    checks.push_back({{"mu", mu},
                      {"deh_better_for_r_ge_2", ordering},
                      {"deh_max_median_deg", worst_deh},
                      {"deh_under_1deg", worst_deh < 1.0},
                      {"both_above_5deg", both_above_5},
                      {"medians", cells}});
  }
  return {{"trials", cfg.trials}, {"seed", cfg.seed}, {"checks", checks}};
}

int cmd_bench_noise(const BenchArgs& a) {
  if (a.print_schema) {
    std::cout << bench_config_schema().dump(2) << '\n';
    return 0;
  }
  const Json j = a.config.empty() ? Json::object() : read_json_file(a.config);
  BenchConfig cfg = bench_config_from_json(j, a.seed.value_or(0), a.seed.has_value());
  if (a.trials) {
    if (*a.trials < 1) throw Error(ErrorKind::kConfig, "trials must be >= 1");
    cfg.trials = *a.trials;
  }
  const World world = generate_scene(cfg.scene, cfg.camera);
  BenchOptions opts;
  opts.ransac = cfg.ransac;
  const auto rows = bench_noise_sweep(world, cfg.camera, cfg.motion, cfg.r_values, cfg.mu_values,
                                      cfg.trials, cfg.seed, opts);
  std::ostringstream csv;
  write_bench_csv(rows, csv);
  emit(a.out, csv.str());

  const Json s = bench_summary(rows, cfg);
  if (!a.summary.empty()) emit(a.summary, s.dump(2) + "\n");
  for (const Json& c : s["checks"]) {
    const double mu = c["mu"].get<double>();
    std::cerr << (c["deh_better_for_r_ge_2"].get<bool>() ? "PASS" : "FAIL")
              << " mu=" << mu << " De-H median below epipolar for every r >= 2\n";
    if (mu == 0.5) {
      std::cerr << (c["deh_under_1deg"].get<bool>() ? "PASS" : "FAIL")
                << " mu=0.5 De-H median under 1 deg\n";
    }
    if (mu == 0.9) {
      std::cerr << (c["both_above_5deg"].get<bool>() ? "PASS" : "FAIL")
                << " mu=0.9 both medians above 5 deg\n";
    }
  }
  return 0;
}

int run_guarded(const std::function<int()>& f) {
  try {
    return f();
  } catch (const Error& e) {
    std::cerr << error_json(e.kind_name(), e.what()).dump() << '\n';
    return e.kind() == ErrorKind::kConfig ? kExitConfig : kExitRuntime;
  } catch (const Json::exception& e) {
    std::cerr << error_json("config", e.what()).dump() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << error_json("runtime", e.what()).dump() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acrkit: plane-based two-view pose, scale recovery and camera relocalization"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate-pose", "Relative pose from correspondences and plane masks");
  e->add_option("-c,--correspondences", est.correspondences, "Correspondence JSON")->required();
  e->add_option("--ref-mask", est.ref_mask, "Reference plane mask (PGM)");
  e->add_option("--cur-mask", est.cur_mask, "Current plane mask (PGM)");
  e->add_option("-k,--intrinsics", est.intrinsics,
                "Intrinsics/camera JSON file or preset name")->capture_default_str();
  e->add_option("-m,--method", est.method, "i2pe, epipolar or homography")
      ->check(CLI::IsMember({"i2pe", "epipolar", "homography"}))
      ->capture_default_str();
  e->add_option("--threshold-px", est.threshold_px, "RANSAC inlier threshold")->capture_default_str();
  e->add_option("--erosion", est.erosion, "Mask erosion radius in pixels")->capture_default_str();
  e->add_option("--seed", est.seed, "RANSAC seed")->capture_default_str();
  e->add_option("-o,--out", est.out, "Output JSON (default stdout)");

  MatchArgs mat;
  auto* m = app.add_subcommand("match-planes", "Pair plane regions across two masks");
  m->add_option("-c,--correspondences", mat.correspondences, "Correspondence JSON")->required();
  m->add_option("--ref-mask", mat.ref_mask, "Reference plane mask (PGM)")->required();
  m->add_option("--cur-mask", mat.cur_mask, "Current plane mask (PGM)")->required();
  m->add_option("--mode", mat.mode, "exact or spectral")
      ->check(CLI::IsMember({"exact", "spectral"}))
      ->capture_default_str();
  m->add_option("--erosion", mat.erosion, "Mask erosion radius in pixels")->capture_default_str();
  m->add_option("--sigma-px", mat.sigma_px, "Edge kernel width, 0 picks it from the masks");
  m->add_option("-o,--out", mat.out, "Output JSON (default stdout)");

  ScaleArgs sc;
  auto* s = app.add_subcommand("solve-scale", "Depth ratios and metric scale for a two-view pair");
  s->add_option("-c,--correspondences", sc.correspondences, "Correspondence JSON")->required();
  s->add_option("-p,--pose", sc.pose, "Directional pose JSON")->required();
  s->add_option("-k,--intrinsics", sc.intrinsics, "Intrinsics/camera JSON file or preset name")
      ->capture_default_str();
  s->add_option("--init-translation", sc.init_translation,
                "Executed translation in metres; yields metric depths of image A")
      ->expected(3);
  s->add_option("--ref-depths", sc.ref_depths, "Known image-A depths (JSON); yields the metric scale");
  s->add_option("-o,--out", sc.out, "Output JSON (default stdout)");

  SimulateArgs sim;
  auto* r = app.add_subcommand("simulate-acr", "Run the relocalization loop on a simulated rig");
  r->add_option("--config", sim.config, "Simulation config JSON (defaults when omitted)");
  r->add_option("--seed", sim.seed, "Override the config seed");
  r->add_flag("--baseline", sim.baseline, "Use the bisection baseline");
  r->add_flag("--omit-timing", sim.omit_timing, "Leave wall_time_s empty for byte-stable output");
  r->add_option("--out-dir", sim.out_dir, "Where trace.jsonl and summary.csv go")->capture_default_str();
  r->add_flag("--print-schema", sim.print_schema, "Print the config JSON schema and exit");

  BenchArgs ben;
  auto* b = app.add_subcommand("bench-noise", "Rotation error of De-H and epipolar under pixel noise");
  b->add_option("--config", ben.config, "Benchmark config JSON (defaults when omitted)");
  b->add_option("--seed", ben.seed, "Override the config seed");
  b->add_option("--trials", ben.trials, "Override the trial count");
  b->add_option("-o,--out", ben.out, "Output CSV (default stdout)");
  b->add_option("--summary", ben.summary, "Pass/fail summary JSON");
  b->add_flag("--print-schema", ben.print_schema, "Print the config JSON schema and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*e) return run_guarded([&] { return cmd_estimate_pose(est); });
  if (*m) return run_guarded([&] { return cmd_match_planes(mat); });
  if (*s) return run_guarded([&] { return cmd_solve_scale(sc); });
  if (*r) return run_guarded([&] { return cmd_simulate_acr(sim); });
  if (*b) return run_guarded([&] { return cmd_bench_noise(ben); });
  return kExitConfig;
}
