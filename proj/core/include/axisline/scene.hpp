#pragma once

#include "axisline/factor_graph.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace axisline {

enum class Scenario { FixedPose, SmallNoise, LargeNoise };
enum class Parameterization { TwoParam, ThreeParam, FourParam };

std::string to_string(Scenario s);
std::string to_string(Parameterization p);
std::optional<Scenario> scenario_from_string(const std::string& s);
std::optional<Parameterization> parameterization_from_string(const std::string& s);

struct SceneConfig {
  int n_axes = 3;
  int lines_per_axis = 20;
  double axis_angular_spread_deg = 2.0;  // true line direction deviation from the axis
  int n_points = 50;
  int n_poses = 10;
  double trajectory_radius = 10.0;
  double trajectory_step_deg = 4.0;  // arc between consecutive poses
  double pixel_noise_sigma = 1.0;

  // Initial estimate perturbations. The pose pair is the scenario knob.
  double pose_rot_noise_deg = 0.0;
  double pose_trans_noise = 0.0;
  double line_init_noise = 0.15;      // endpoint perturbation, world units
  double axis_init_noise_deg = 3.0;   // initial axis direction error
  double point_init_noise = 0.1;

  std::uint64_t seed = 0;

  static SceneConfig noiseless();
  SceneConfig with_scenario(Scenario s) const;
  SceneConfig with_seed(std::uint64_t seed) const;
};

struct TrueLine {
  int axis_id = -1;
  Eigen::Vector3d p1 = Eigen::Vector3d::Zero();
  Eigen::Vector3d p2 = Eigen::Vector3d::Zero();
  PluckerLine line;
};

/// Ground truth, noisy observations and perturbed initial estimates for one
/// synthetic run; fully determined by the config (including the seed).
struct Scene {
  SceneConfig config;
  CameraIntrinsics intrinsics;

  std::vector<Pose> true_poses_cw;
  std::vector<Eigen::Vector3d> true_axes;
  std::vector<TrueLine> true_lines;
  std::vector<Eigen::Vector3d> true_points;

  std::vector<PointObs> point_obs;
  std::vector<SegmentObs> segment_obs;
  std::vector<int> line_ref_keyframe;  // first observing pose per line

  std::vector<Pose> init_poses_cw;
  std::vector<Eigen::Vector3d> init_points;
  std::vector<PluckerLine> init_lines;
  std::vector<Eigen::Vector3d> init_axes;

  std::map<int, PluckerLine> true_line_map() const;
};

/// Deterministic scene synthesis. Lines and points with fewer than two
/// observations are dropped; throws std::runtime_error ("empty-scene") when
/// nothing at all is visible.
Scene generate_scene(const SceneConfig& cfg);

/// Builds the optimization problem over the scene's initial estimates with
/// the chosen line representation. The first pose is fixed (gauge); the
/// three-parameter build carries free axis vertices plus hard unit
/// association, the four-parameter build uses the orthonormal representation
/// for every line, the two-parameter baseline pins each line's direction to
/// its initial axis estimate.
FactorGraph build_graph(const Scene& scene, Parameterization param);

/// Current world Plucker lines of every line vertex.
std::map<int, PluckerLine> estimated_lines(const FactorGraph& g);

/// Mean distance between canonically normalized Plucker 6-vectors over
/// matched ids. Throws std::invalid_argument ("mismatch") on id mismatch.
double error_l(const std::map<int, PluckerLine>& estimated,
               const std::map<int, PluckerLine>& truth);

/// RMSE of camera-center differences over the free (non-gauge) poses.
double trans_rmse(const std::vector<Pose>& estimated_cw, const std::vector<Pose>& true_cw,
                  const std::vector<bool>& fixed);

double trans_rmse(const FactorGraph& g, const Scene& scene);

}  // namespace axisline
