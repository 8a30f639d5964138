#include "commands.hpp"

#include "axisline/pipeline.hpp"
#include "axisline/serialization.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace axisline::cli {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& prefix) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::invalid_argument("unknown config key '" + prefix + key + "'");
    }
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void parse_scene_section(const json& obj, SceneConfig& cfg, const std::string& prefix) {
  reject_unknown_keys(obj,
                      {"n_axes", "lines_per_axis", "axis_angular_spread_deg", "n_points",
                       "n_poses", "trajectory_radius", "trajectory_step_deg",
                       "pixel_noise_sigma", "pose_rot_noise_deg", "pose_trans_noise",
                       "line_init_noise", "axis_init_noise_deg", "point_init_noise", "seed"},
                      prefix);
  read_field(obj, "n_axes", cfg.n_axes);
  read_field(obj, "lines_per_axis", cfg.lines_per_axis);
  read_field(obj, "axis_angular_spread_deg", cfg.axis_angular_spread_deg);
  read_field(obj, "n_points", cfg.n_points);
  read_field(obj, "n_poses", cfg.n_poses);
  read_field(obj, "trajectory_radius", cfg.trajectory_radius);
  read_field(obj, "trajectory_step_deg", cfg.trajectory_step_deg);
  read_field(obj, "pixel_noise_sigma", cfg.pixel_noise_sigma);
  read_field(obj, "pose_rot_noise_deg", cfg.pose_rot_noise_deg);
  read_field(obj, "pose_trans_noise", cfg.pose_trans_noise);
  read_field(obj, "line_init_noise", cfg.line_init_noise);
  read_field(obj, "axis_init_noise_deg", cfg.axis_init_noise_deg);
  read_field(obj, "point_init_noise", cfg.point_init_noise);
  read_field(obj, "seed", cfg.seed);
}

void parse_axis_policy_section(const json& obj, AxisPolicy& p, const std::string& prefix) {
  reject_unknown_keys(obj,
                      {"creation_threshold", "merge_angle_deg", "unstructured_ratio",
                       "update_angle_deg", "max_changes", "gate_angle_deg", "assoc_sigma_deg"},
                      prefix);
  read_field(obj, "creation_threshold", p.creation_threshold);
  read_field(obj, "merge_angle_deg", p.merge_angle_deg);
  read_field(obj, "unstructured_ratio", p.unstructured_ratio);
  read_field(obj, "update_angle_deg", p.update_angle_deg);
  read_field(obj, "max_changes", p.max_changes);
  read_field(obj, "gate_angle_deg", p.gate_angle_deg);
  read_field(obj, "assoc_sigma_deg", p.assoc_sigma_deg);
}

void parse_mean_shift_section(const json& obj, MeanShiftConfig& m, const std::string& prefix) {
  reject_unknown_keys(obj, {"bandwidth_deg", "kernel_c", "max_iters", "convergence_deg"}, prefix);
  read_field(obj, "bandwidth_deg", m.bandwidth_deg);
  read_field(obj, "kernel_c", m.kernel_c);
  read_field(obj, "max_iters", m.max_iters);
  read_field(obj, "convergence_deg", m.convergence_deg);
}

void parse_lm_section(const json& obj, LMConfig& lm, const std::string& prefix) {
  reject_unknown_keys(obj,
                      {"max_iters", "initial_lambda", "lambda_up", "lambda_down", "max_lambda",
                       "rel_cost_tol", "param_tol", "gradient_tol", "cost_floor",
                       "robust_width_px"},
                      prefix);
  read_field(obj, "max_iters", lm.max_iters);
  read_field(obj, "initial_lambda", lm.initial_lambda);
  read_field(obj, "lambda_up", lm.lambda_up);
  read_field(obj, "lambda_down", lm.lambda_down);
  read_field(obj, "max_lambda", lm.max_lambda);
  read_field(obj, "rel_cost_tol", lm.rel_cost_tol);
  read_field(obj, "param_tol", lm.param_tol);
  read_field(obj, "gradient_tol", lm.gradient_tol);
  read_field(obj, "cost_floor", lm.cost_floor);
  read_field(obj, "robust_width_px", lm.robust_width_px);
}

void parse_vp_section(const json& obj, VPTolerances& vp, const std::string& prefix) {
  reject_unknown_keys(obj, {"angle_tol_deg", "dist_tol_px"}, prefix);
  read_field(obj, "angle_tol_deg", vp.angle_tol_deg);
  read_field(obj, "dist_tol_px", vp.dist_tol_px);
}

void parse_bench_section(const json& obj, BenchOptions& bench, const std::string& prefix) {
  reject_unknown_keys(obj, {"seeds", "base_seed", "scenarios", "params", "threads"}, prefix);
  read_field(obj, "seeds", bench.n_seeds);
  read_field(obj, "base_seed", bench.base_seed);
  read_field(obj, "threads", bench.threads);
  if (obj.contains("scenarios")) {
    bench.scenarios.clear();
    for (const auto& s : obj.at("scenarios")) {
      const auto parsed = scenario_from_string(s.get<std::string>());
      if (!parsed) throw std::invalid_argument("bad value in '" + prefix + "scenarios'");
      bench.scenarios.push_back(*parsed);
    }
  }
  if (obj.contains("params")) {
    bench.params.clear();
    for (const auto& s : obj.at("params")) {
      const auto parsed = parameterization_from_string(s.get<std::string>());
      if (!parsed) throw std::invalid_argument("bad value in '" + prefix + "params'");
      bench.params.push_back(*parsed);
    }
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw std::invalid_argument(std::string("config parse error: ") + err.what());
  }
  RunConfig cfg;
  reject_unknown_keys(root, {"scene", "axis_policy", "mean_shift", "lm", "vp", "bench", "output"},
                      "");
  if (root.contains("scene")) parse_scene_section(root.at("scene"), cfg.scene, "scene.");
  if (root.contains("axis_policy")) {
    parse_axis_policy_section(root.at("axis_policy"), cfg.axis_policy, "axis_policy.");
  }
  if (root.contains("mean_shift")) {
    parse_mean_shift_section(root.at("mean_shift"), cfg.mean_shift, "mean_shift.");
  }
  if (root.contains("lm")) parse_lm_section(root.at("lm"), cfg.lm, "lm.");
  if (root.contains("vp")) parse_vp_section(root.at("vp"), cfg.vp, "vp.");
  if (root.contains("bench")) parse_bench_section(root.at("bench"), cfg.bench, "bench.");
  if (root.contains("output")) {
    reject_unknown_keys(root.at("output"), {"dir"}, "output.");
    read_field(root.at("output"), "dir", cfg.output_dir);
  }
  cfg.bench.scene = cfg.scene;
  cfg.bench.lm = cfg.lm;
  return cfg;
}

int cmd_bench(const BenchArgs& args) {
  RunConfig cfg;
  try {
    if (!args.config_path.empty()) cfg = parse_run_config(read_file(args.config_path));
    for (const auto& p : args.params) {
      if (!parameterization_from_string(p)) {
        throw std::invalid_argument("unknown parameterization '" + p + "'");
      }
    }
    for (const auto& s : args.scenarios) {
      if (!scenario_from_string(s)) {
        throw std::invalid_argument("unknown scenario '" + s + "'");
      }
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }

  if (!args.params.empty()) {
    cfg.bench.params.clear();
    for (const auto& p : args.params) cfg.bench.params.push_back(*parameterization_from_string(p));
  }
  if (!args.scenarios.empty()) {
    cfg.bench.scenarios.clear();
    for (const auto& s : args.scenarios) cfg.bench.scenarios.push_back(*scenario_from_string(s));
  }
  if (args.seeds) cfg.bench.n_seeds = *args.seeds;
  if (args.seed) cfg.bench.base_seed = *args.seed;
  const std::string out_dir = args.out_dir.empty() ? cfg.output_dir : args.out_dir;

  try {
    BenchReport report;
    if (!args.scene_path.empty()) {
      // Replay a captured scene across the requested parameterizations.
      const Scene scene = scene_from_json(read_file(args.scene_path));
      for (const Parameterization param : cfg.bench.params) {
        BenchCell cell = run_cell(scene, param, cfg.bench.lm);
        cell.scenario = cfg.bench.scenarios.empty() ? Scenario::FixedPose
                                                    : cfg.bench.scenarios.front();
        report.cells.push_back(cell);
        BenchResult res;
        res.scenario = cell.scenario;
        res.param = param;
        res.time_seconds = cell.time_s;
        res.error_l = cell.error_l;
        res.trans_rmse = cell.trans_rmse;
        res.n_seeds = 1;
        res.n_diverged = cell.diverged ? 1 : 0;
        report.results.push_back(res);
      }
    } else {
      report = run_benchmark(cfg.bench);
    }

    write_file(out_dir + "/results.csv", bench_csv(report));
    write_file(out_dir + "/summary.json", bench_report_to_json(report));
    std::cout << bench_grid(report);

    int diverged = 0;
    for (const auto& cell : report.cells) diverged += cell.diverged ? 1 : 0;
    if (diverged > 0) {
      std::cerr << "warning: " << diverged << " diverged cell(s)\n";
      if (args.strict) return 1;
    }
    return 0;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
}

int cmd_vp(const VPArgs& args) {
  try {
    const auto segments = segments_from_json(read_file(args.segments_path));
    std::vector<Segment2D> segs;
    std::vector<int> ids;
    for (const auto& [id, seg] : segments) {
      ids.push_back(id);
      segs.push_back(seg);
    }

    const Pose pose_cw = Pose::from_rotvec(args.pose_rotvec, args.pose_trans);
    const CameraIntrinsics k{args.fx, args.fy, args.cx, args.cy};
    const VPTolerances tol{args.angle_tol_deg, args.dist_tol_px};

    std::cout << "proposals: " << generate_proposals(pose_cw.rotation * args.d_v).size() << "\n";
    const VPResult result = estimate_frame(segs, args.d_v, pose_cw, k, tol);

    for (const auto& [label, vp] : result.labeled_vps()) {
      // Residual of the refined VP against its own cluster.
      std::vector<Segment2D> cluster;
      for (const auto& [index, cls] : result.classes) {
        if (cls == label) cluster.push_back(segs[static_cast<size_t>(index)]);
      }
      double residual = 0.0;
      for (const auto& seg : cluster) {
        residual += std::pow(seg.infinite_line().normalized().dot(vp.normalized()), 2);
      }
      std::cout << to_string(label) << " vp: [" << vp.x() << ", " << vp.y() << ", " << vp.z()
                << "] residual " << std::sqrt(residual) << " over " << cluster.size()
                << " segments\n";
    }

    if (!args.out_path.empty()) {
      write_file(args.out_path, vp_result_to_json(result, ids));
    }
    return 0;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
}

int cmd_scene(const SceneArgs& args) {
  try {
    RunConfig cfg;
    if (!args.config_path.empty()) cfg = parse_run_config(read_file(args.config_path));
    if (args.seed) cfg.scene.seed = *args.seed;
    const Scene scene = generate_scene(cfg.scene);
    const std::string text = scene_to_json(scene);
    if (args.out_path.empty()) {
      std::cout << text;
    } else {
      write_file(args.out_path, text);
    }
    return 0;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
}

}  // namespace axisline::cli
