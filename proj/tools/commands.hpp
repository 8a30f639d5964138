#pragma once

#include "axisline/benchmark.hpp"
#include "axisline/vanish.hpp"

#include <optional>
#include <string>
#include <vector>

namespace axisline::cli {

/// Merged run configuration: scene/axis/mean-shift/LM/VP settings plus
/// benchmark shape and output paths. Parsed strictly: unknown keys are
/// rejected with their full path.
struct RunConfig {
  SceneConfig scene;
  AxisPolicy axis_policy;
  MeanShiftConfig mean_shift;
  LMConfig lm;
  VPTolerances vp;
  BenchOptions bench;  // scene/lm mirrored in here when running
  std::string output_dir = "results";
};

/// Throws std::invalid_argument naming the offending field on errors.
RunConfig parse_run_config(const std::string& json_text);

struct BenchArgs {
  std::string config_path;          // optional; defaults apply when empty
  std::string scene_path;           // replay a scene file instead of generating
  std::vector<std::string> params;
  std::vector<std::string> scenarios;
  std::optional<int> seeds;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool strict = false;
};

struct VPArgs {
  std::string segments_path;
  Eigen::Vector3d d_v = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d pose_rotvec = Eigen::Vector3d::Zero();
  Eigen::Vector3d pose_trans = Eigen::Vector3d::Zero();
  double fx = 500.0, fy = 500.0, cx = 320.0, cy = 240.0;
  double angle_tol_deg = 2.0;
  double dist_tol_px = 3.0;
  std::string out_path;
};

struct SceneArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
};

// Exit codes: 0 success, 1 solver divergence under --strict, 2 input error.
int cmd_bench(const BenchArgs& args);
int cmd_vp(const VPArgs& args);
int cmd_scene(const SceneArgs& args);

}  // namespace axisline::cli
