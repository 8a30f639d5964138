#include "axisline/scene.hpp"

#include "axisline/pipeline.hpp"
#include "axisline/rng.hpp"

#include <algorithm>
#include <cmath>

namespace axisline {

namespace {
constexpr double kBoxHalfExtent = 4.0;
constexpr double kMinFrontDepth = 0.2;
constexpr double kCameraHeight = 1.5;

double rad(double d) { return d * M_PI / 180.0; }
}  // namespace

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::FixedPose: return "fixed";
    case Scenario::SmallNoise: return "small";
    case Scenario::LargeNoise: return "large";
  }
  return "fixed";
}

std::string to_string(Parameterization p) {
  switch (p) {
    case Parameterization::TwoParam: return "2p";
    case Parameterization::ThreeParam: return "3p";
    case Parameterization::FourParam: return "4p";
  }
  return "3p";
}

std::optional<Scenario> scenario_from_string(const std::string& s) {
  if (s == "fixed") return Scenario::FixedPose;
  if (s == "small") return Scenario::SmallNoise;
  if (s == "large") return Scenario::LargeNoise;
  return std::nullopt;
}

std::optional<Parameterization> parameterization_from_string(const std::string& s) {
  if (s == "2p") return Parameterization::TwoParam;
  if (s == "3p") return Parameterization::ThreeParam;
  if (s == "4p") return Parameterization::FourParam;
  return std::nullopt;
}

SceneConfig SceneConfig::noiseless() {
  SceneConfig cfg;
  cfg.axis_angular_spread_deg = 0.0;
  cfg.pixel_noise_sigma = 0.0;
  cfg.pose_rot_noise_deg = 0.0;
  cfg.pose_trans_noise = 0.0;
  cfg.line_init_noise = 0.0;
  cfg.axis_init_noise_deg = 0.0;
  cfg.point_init_noise = 0.0;
  return cfg;
}

SceneConfig SceneConfig::with_scenario(Scenario s) const {
  SceneConfig out = *this;
  switch (s) {
    case Scenario::FixedPose:
      out.pose_rot_noise_deg = 0.0;
      out.pose_trans_noise = 0.0;
      break;
    case Scenario::SmallNoise:
      out.pose_rot_noise_deg = 0.5;
      out.pose_trans_noise = 0.02;
      break;
    case Scenario::LargeNoise:
      out.pose_rot_noise_deg = 3.0;
      out.pose_trans_noise = 0.2;
      break;
  }
  return out;
}

SceneConfig SceneConfig::with_seed(std::uint64_t seed) const {
  SceneConfig out = *this;
  out.seed = seed;
  return out;
}

std::map<int, PluckerLine> Scene::true_line_map() const {
  std::map<int, PluckerLine> out;
  for (size_t i = 0; i < true_lines.size(); ++i) out[static_cast<int>(i)] = true_lines[i].line;
  return out;
}

namespace {

Pose look_at_pose_cw(const Eigen::Vector3d& eye, const Eigen::Vector3d& target) {
  const Eigen::Vector3d z = (target - eye).normalized();
  Eigen::Vector3d x = z.cross(Eigen::Vector3d::UnitZ());
  if (x.norm() < 1e-6) x = z.cross(Eigen::Vector3d::UnitY());
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  Pose wc;
  wc.rotation.col(0) = x;
  wc.rotation.col(1) = y;
  wc.rotation.col(2) = z;
  wc.translation = eye;
  return wc.inverse();
}

std::vector<Eigen::Vector3d> sample_axes(Rng& rng, int n_axes) {
  const double min_sep = rad(30.0);
  std::vector<Eigen::Vector3d> axes;
  int guard = 0;
  while (static_cast<int>(axes.size()) < n_axes && guard < 10000) {
    ++guard;
    Eigen::Vector3d cand = rng.unit_vector();
    if (std::abs(cand.z()) > 0.95) continue;  // keep away from the lat/long pole
    const bool ok = std::all_of(axes.begin(), axes.end(), [&](const Eigen::Vector3d& a) {
      return projective_angle(a, cand) >= min_sep;
    });
    if (ok) axes.push_back(cand);
  }
  while (static_cast<int>(axes.size()) < n_axes) axes.push_back(rng.unit_vector());
  return axes;
}

}  // namespace

Scene generate_scene(const SceneConfig& cfg) {
  if (cfg.n_axes <= 0 || cfg.lines_per_axis <= 0 || cfg.n_poses <= 0) {
    throw std::invalid_argument("invalid scene config: counts must be positive");
  }
  Rng rng(cfg.seed * 0x9e3779b97f4a7c15ULL + 1);

  Scene scene;
  scene.config = cfg;
  scene.intrinsics = CameraIntrinsics{500.0, 500.0, 320.0, 240.0};

  scene.true_axes = sample_axes(rng, cfg.n_axes);

  std::vector<TrueLine> lines;
  for (int a = 0; a < cfg.n_axes; ++a) {
    for (int i = 0; i < cfg.lines_per_axis; ++i) {
      TrueLine line;
      line.axis_id = a;
      const Eigen::Vector3d dir =
          rng.perturb_direction(scene.true_axes[static_cast<size_t>(a)],
                                rad(cfg.axis_angular_spread_deg));
      const Eigen::Vector3d center(rng.uniform(-kBoxHalfExtent, kBoxHalfExtent),
                                   rng.uniform(-kBoxHalfExtent, kBoxHalfExtent),
                                   rng.uniform(-kBoxHalfExtent, kBoxHalfExtent));
      const double half_len = rng.uniform(0.75, 1.5);
      line.p1 = center - half_len * dir;
      line.p2 = center + half_len * dir;
      line.line = plucker_from_points(line.p1, line.p2);
      lines.push_back(line);
    }
  }

  std::vector<Eigen::Vector3d> points;
  for (int i = 0; i < cfg.n_points; ++i) {
    points.emplace_back(rng.uniform(-kBoxHalfExtent, kBoxHalfExtent),
                        rng.uniform(-kBoxHalfExtent, kBoxHalfExtent),
                        rng.uniform(-kBoxHalfExtent, kBoxHalfExtent));
  }

  for (int k = 0; k < cfg.n_poses; ++k) {
    const double ang = rad(cfg.trajectory_step_deg) * k;
    const Eigen::Vector3d eye(cfg.trajectory_radius * std::cos(ang),
                              cfg.trajectory_radius * std::sin(ang), kCameraHeight);
    scene.true_poses_cw.push_back(look_at_pose_cw(eye, Eigen::Vector3d::Zero()));
  }

  // Observations with pixel noise; visibility requires the sample in front of
  // the camera.
  std::vector<std::vector<PointObs>> point_obs_by_point(points.size());
  for (int k = 0; k < cfg.n_poses; ++k) {
    const Pose& cw = scene.true_poses_cw[static_cast<size_t>(k)];
    for (size_t p = 0; p < points.size(); ++p) {
      const Eigen::Vector3d p_c = cw * points[p];
      const Eigen::Vector2d noise = rng.gaussian2(cfg.pixel_noise_sigma);
      if (p_c.z() <= kMinFrontDepth) continue;
      point_obs_by_point[p].push_back(
          {k, static_cast<int>(p), scene.intrinsics.project(p_c) + noise});
    }
  }
  std::vector<std::vector<SegmentObs>> seg_obs_by_line(lines.size());
  for (int k = 0; k < cfg.n_poses; ++k) {
    const Pose& cw = scene.true_poses_cw[static_cast<size_t>(k)];
    for (size_t l = 0; l < lines.size(); ++l) {
      const Eigen::Vector3d p1_c = cw * lines[l].p1;
      const Eigen::Vector3d p2_c = cw * lines[l].p2;
      const Eigen::Vector2d n1 = rng.gaussian2(cfg.pixel_noise_sigma);
      const Eigen::Vector2d n2 = rng.gaussian2(cfg.pixel_noise_sigma);
      if (p1_c.z() <= kMinFrontDepth || p2_c.z() <= kMinFrontDepth) continue;
      Segment2D seg{scene.intrinsics.project(p1_c) + n1, scene.intrinsics.project(p2_c) + n2};
      seg_obs_by_line[l].push_back({k, static_cast<int>(l), seg});
    }
  }

  // Initial estimates. Perturbations are drawn before filtering so the draw
  // stream does not depend on visibility.
  scene.init_poses_cw.push_back(scene.true_poses_cw[0]);  // gauge pose kept exact
  for (int k = 1; k < cfg.n_poses; ++k) {
    const Pose& cw = scene.true_poses_cw[static_cast<size_t>(k)];
    Pose noisy = cw;
    noisy.rotation = cw.rotation * rotation_exp(rng.gaussian3(rad(cfg.pose_rot_noise_deg)));
    noisy.translation = cw.translation + rng.gaussian3(cfg.pose_trans_noise);
    scene.init_poses_cw.push_back(noisy);
  }
  std::vector<Eigen::Vector3d> init_points;
  for (const auto& p : points) init_points.push_back(p + rng.gaussian3(cfg.point_init_noise));
  std::vector<PluckerLine> init_lines;
  for (const auto& line : lines) {
    const Eigen::Vector3d p1 = line.p1 + rng.gaussian3(cfg.line_init_noise);
    const Eigen::Vector3d p2 = line.p2 + rng.gaussian3(cfg.line_init_noise);
    init_lines.push_back(plucker_from_points(p1, p2));
  }
  for (const auto& axis : scene.true_axes) {
    scene.init_axes.push_back(rng.perturb_direction(axis, rad(cfg.axis_init_noise_deg)));
  }

  // Keep only points/lines observed at least twice, renumbering densely.
  int next_point = 0;
  for (size_t p = 0; p < points.size(); ++p) {
    if (point_obs_by_point[p].size() < 2) continue;
    for (auto obs : point_obs_by_point[p]) {
      obs.point_id = next_point;
      scene.point_obs.push_back(obs);
    }
    scene.true_points.push_back(points[p]);
    scene.init_points.push_back(init_points[p]);
    ++next_point;
  }
  int next_line = 0;
  for (size_t l = 0; l < lines.size(); ++l) {
    if (seg_obs_by_line[l].size() < 2) continue;
    for (auto obs : seg_obs_by_line[l]) {
      obs.line_id = next_line;
      scene.segment_obs.push_back(obs);
    }
    scene.true_lines.push_back(lines[l]);
    scene.init_lines.push_back(init_lines[l]);
    scene.line_ref_keyframe.push_back(seg_obs_by_line[l].front().pose_id);
    ++next_line;
  }

  if (scene.point_obs.empty() && scene.segment_obs.empty()) {
    throw std::runtime_error("empty-scene: no visible observations");
  }
  return scene;
}

namespace {

/// Anchor pixel of a line: observed segment midpoint in its reference
/// keyframe.
Eigen::Vector2d anchor_pixel_of(const Scene& scene, int line_id) {
  for (const auto& obs : scene.segment_obs) {
    if (obs.line_id == line_id &&
        obs.pose_id == scene.line_ref_keyframe[static_cast<size_t>(line_id)]) {
      return obs.segment.midpoint();
    }
  }
  throw std::logic_error("line has no observation in its reference keyframe");
}

double fallback_inv_depth(const Scene& scene, const PluckerLine& init_line, int ref_pose) {
  const Pose& cw = scene.init_poses_cw[static_cast<size_t>(ref_pose)];
  const Eigen::Vector3d center = cw.inverse().translation;
  // Depth of the line point closest to the camera center.
  const Eigen::Vector3d q0 = init_line.closest_point_to_origin();
  const Eigen::Vector3d v = init_line.v.normalized();
  const Eigen::Vector3d q = q0 + v * v.dot(center - q0);
  const double z = (cw * q).z();
  return 1.0 / std::max(z, 0.1);
}

}  // namespace

FactorGraph build_graph(const Scene& scene, Parameterization param) {
  FactorGraph g;
  g.intrinsics = scene.intrinsics;
  for (size_t k = 0; k < scene.init_poses_cw.size(); ++k) {
    g.poses[static_cast<int>(k)] = PoseVertex{scene.init_poses_cw[k], k == 0};
  }
  for (size_t p = 0; p < scene.init_points.size(); ++p) {
    g.points[static_cast<int>(p)] = PointVertex{scene.init_points[p], false};
  }
  g.point_obs = scene.point_obs;
  g.segment_obs = scene.segment_obs;

  if (param == Parameterization::ThreeParam) {
    for (size_t a = 0; a < scene.init_axes.size(); ++a) {
      PrincipalAxis axis;
      axis.id = static_cast<int>(a);
      axis.dir = latlong_from_direction(scene.init_axes[a]);
      axis.prior_dir = scene.init_axes[a];
      g.axes[axis.id] = axis;
    }
  }

  for (size_t l = 0; l < scene.init_lines.size(); ++l) {
    const int line_id = static_cast<int>(l);
    const PluckerLine& init = scene.init_lines[l];
    LineVertex line;
    line.anchor_pixel = anchor_pixel_of(scene, line_id);
    line.ref_keyframe = scene.line_ref_keyframe[l];

    switch (param) {
      case Parameterization::ThreeParam: {
        line.stage = LineStage::AxisAnchored;
        line.axis_ref = scene.true_lines[l].axis_id;
        const auto r = anchor_ray_inv_depth(
            init, line.anchor_pixel, scene.init_poses_cw[static_cast<size_t>(line.ref_keyframe)],
            scene.intrinsics);
        line.inv_depth = r ? *r : fallback_inv_depth(scene, init, line.ref_keyframe);
        g.association.weights[{line_id, line.axis_ref}] = 1.0;
        g.axes.at(line.axis_ref).member_lines[line_id] = 1.0;
        break;
      }
      case Parameterization::FourParam: {
        line.stage = LineStage::OrthoFallback;
        line.ortho = ortho_from_plucker(init);
        break;
      }
      case Parameterization::TwoParam: {
        line.stage = LineStage::FixedDirection;
        line.fixed_dir = scene.init_axes[static_cast<size_t>(scene.true_lines[l].axis_id)];
        const auto [b1, b2] = tangent_basis(line.fixed_dir);
        const Eigen::Vector3d q0 = init.closest_point_to_origin();
        line.plane_coords = {q0.dot(b1), q0.dot(b2)};
        break;
      }
    }
    g.lines[line_id] = line;
  }
  return g;
}

std::map<int, PluckerLine> estimated_lines(const FactorGraph& g) {
  std::map<int, PluckerLine> out;
  for (const auto& [id, line] : g.lines) out[id] = g.line_geometry(id);
  return out;
}

double error_l(const std::map<int, PluckerLine>& estimated,
               const std::map<int, PluckerLine>& truth) {
  if (estimated.size() != truth.size()) {
    throw std::invalid_argument("mismatch: line id sets differ");
  }
  double total = 0.0;
  for (const auto& [id, est] : estimated) {
    const auto it = truth.find(id);
    if (it == truth.end()) {
      throw std::invalid_argument("mismatch: line id sets differ");
    }
    total += (normalized_plucker(est) - normalized_plucker(it->second)).norm();
  }
  return estimated.empty() ? 0.0 : total / static_cast<double>(estimated.size());
}

double trans_rmse(const std::vector<Pose>& estimated_cw, const std::vector<Pose>& true_cw,
                  const std::vector<bool>& fixed) {
  double total = 0.0;
  int count = 0;
  for (size_t k = 0; k < estimated_cw.size(); ++k) {
    if (k < fixed.size() && fixed[k]) continue;
    const Eigen::Vector3d c_est = estimated_cw[k].inverse().translation;
    const Eigen::Vector3d c_true = true_cw[k].inverse().translation;
    total += (c_est - c_true).squaredNorm();
    ++count;
  }
  return count == 0 ? 0.0 : std::sqrt(total / count);
}

double trans_rmse(const FactorGraph& g, const Scene& scene) {
  std::vector<Pose> est;
  std::vector<bool> fixed;
  for (const auto& [id, pose] : g.poses) {
    est.push_back(pose.pose_cw);
    fixed.push_back(pose.fixed);
  }
  return trans_rmse(est, scene.true_poses_cw, fixed);
}

}  // namespace axisline
