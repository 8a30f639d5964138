#include "commands.hpp"

#include <CLI11.hpp>

#include <string>
#include <vector>

namespace {

bool parse_vec3(const std::string& text, Eigen::Vector3d& out) {
  double x = 0, y = 0, z = 0;
  char comma1 = 0, comma2 = 0;
  std::istringstream in(text);
  in >> x >> comma1 >> y >> comma2 >> z;
  if (!in || comma1 != ',' || comma2 != ',') return false;
  out = {x, y, z};
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Axis-anchored structural line optimization"};
  app.require_subcommand(1);

  axisline::cli::BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Run the synthetic comparison benchmark");
  bench->add_option("--config", bench_args.config_path, "RunConfig JSON file");
  bench->add_option("--scene", bench_args.scene_path, "Replay a captured scene JSON");
  bench->add_option("--param", bench_args.params, "Parameterizations (2p, 3p, 4p)");
  bench->add_option("--scenario", bench_args.scenarios, "Scenarios (fixed, small, large)");
  bench->add_option("--seeds", bench_args.seeds, "Number of seeds");
  bench->add_option("--seed", bench_args.seed, "Base seed");
  bench->add_option("--out", bench_args.out_dir, "Output directory");
  bench->add_flag("--strict", bench_args.strict, "Exit 1 when any cell diverges");

  axisline::cli::VPArgs vp_args;
  std::string dv_text = "0,0,1";
  std::string rot_text = "0,0,0";
  std::string trans_text = "0,0,0";
  auto* vp = app.add_subcommand("vp", "Vertical-prior vanishing point estimation");
  vp->add_option("--segments", vp_args.segments_path, "Segment JSON file")->required();
  vp->add_option("--dv", dv_text, "World vertical direction x,y,z");
  vp->add_option("--pose-rotvec", rot_text, "Pose rotation vector (world->camera) rx,ry,rz");
  vp->add_option("--pose-trans", trans_text, "Pose translation tx,ty,tz");
  vp->add_option("--fx", vp_args.fx, "Focal length x");
  vp->add_option("--fy", vp_args.fy, "Focal length y");
  vp->add_option("--cx", vp_args.cx, "Principal point x");
  vp->add_option("--cy", vp_args.cy, "Principal point y");
  vp->add_option("--angle-tol", vp_args.angle_tol_deg, "Scoring angle tolerance, degrees");
  vp->add_option("--dist-tol", vp_args.dist_tol_px, "Classification distance tolerance, pixels");
  vp->add_option("--out", vp_args.out_path, "Output VPResult JSON path");

  axisline::cli::SceneArgs scene_args;
  auto* scene = app.add_subcommand("scene", "Generate a reproducible synthetic scene");
  scene->add_option("--config", scene_args.config_path, "RunConfig JSON file");
  scene->add_option("--seed", scene_args.seed, "Scene seed");
  scene->add_option("--out", scene_args.out_path, "Output scene JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  if (bench->parsed()) return axisline::cli::cmd_bench(bench_args);
  if (vp->parsed()) {
    if (!parse_vec3(dv_text, vp_args.d_v) || !parse_vec3(rot_text, vp_args.pose_rotvec) ||
        !parse_vec3(trans_text, vp_args.pose_trans)) {
      std::cerr << "error: vectors must be given as x,y,z\n";
      return 2;
    }
    return axisline::cli::cmd_vp(vp_args);
  }
  if (scene->parsed()) return axisline::cli::cmd_scene(scene_args);
  return 2;
}
