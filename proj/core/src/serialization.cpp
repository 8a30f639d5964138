#include "axisline/serialization.hpp"

#include <json.hpp>

namespace axisline {

namespace {

using nlohmann::json;

json vec_to_json(const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); }
json vec_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector2d vec2_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
Eigen::Vector3d vec3_from_json(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json pose_to_json(const Pose& pose) {
  return json{{"rotvec", vec_to_json(rotation_log(pose.rotation))},
              {"t", vec_to_json(pose.translation)}};
}

Pose pose_from_json(const json& j) {
  return Pose::from_rotvec(vec3_from_json(j.at("rotvec")), vec3_from_json(j.at("t")));
}

json config_to_json(const SceneConfig& cfg) {
  return json{{"n_axes", cfg.n_axes},
              {"lines_per_axis", cfg.lines_per_axis},
              {"axis_angular_spread_deg", cfg.axis_angular_spread_deg},
              {"n_points", cfg.n_points},
              {"n_poses", cfg.n_poses},
              {"trajectory_radius", cfg.trajectory_radius},
              {"trajectory_step_deg", cfg.trajectory_step_deg},
              {"pixel_noise_sigma", cfg.pixel_noise_sigma},
              {"pose_rot_noise_deg", cfg.pose_rot_noise_deg},
              {"pose_trans_noise", cfg.pose_trans_noise},
              {"line_init_noise", cfg.line_init_noise},
              {"axis_init_noise_deg", cfg.axis_init_noise_deg},
              {"point_init_noise", cfg.point_init_noise},
              {"seed", cfg.seed}};
}

SceneConfig config_from_json(const json& j) {
  SceneConfig cfg;
  cfg.n_axes = j.at("n_axes").get<int>();
  cfg.lines_per_axis = j.at("lines_per_axis").get<int>();
  cfg.axis_angular_spread_deg = j.at("axis_angular_spread_deg").get<double>();
  cfg.n_points = j.at("n_points").get<int>();
  cfg.n_poses = j.at("n_poses").get<int>();
  cfg.trajectory_radius = j.at("trajectory_radius").get<double>();
  cfg.trajectory_step_deg = j.at("trajectory_step_deg").get<double>();
  cfg.pixel_noise_sigma = j.at("pixel_noise_sigma").get<double>();
  cfg.pose_rot_noise_deg = j.at("pose_rot_noise_deg").get<double>();
  cfg.pose_trans_noise = j.at("pose_trans_noise").get<double>();
  cfg.line_init_noise = j.at("line_init_noise").get<double>();
  cfg.axis_init_noise_deg = j.at("axis_init_noise_deg").get<double>();
  cfg.point_init_noise = j.at("point_init_noise").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

}  // namespace

std::string scene_to_json(const Scene& scene) {
  json truth;
  truth["poses"] = json::array();
  for (const auto& p : scene.true_poses_cw) truth["poses"].push_back(pose_to_json(p));
  truth["axes"] = json::array();
  for (const auto& a : scene.true_axes) truth["axes"].push_back(vec_to_json(a));
  truth["points"] = json::array();
  for (const auto& p : scene.true_points) truth["points"].push_back(vec_to_json(p));
  truth["lines"] = json::array();
  for (const auto& l : scene.true_lines) {
    truth["lines"].push_back(
        json{{"axis", l.axis_id}, {"p1", vec_to_json(l.p1)}, {"p2", vec_to_json(l.p2)}});
  }

  json obs;
  obs["points"] = json::array();
  for (const auto& o : scene.point_obs) {
    obs["points"].push_back(json{{"pose", o.pose_id}, {"point", o.point_id},
                                 {"uv", vec_to_json(o.pixel)}});
  }
  obs["segments"] = json::array();
  for (const auto& o : scene.segment_obs) {
    obs["segments"].push_back(json{{"pose", o.pose_id},
                                   {"line", o.line_id},
                                   {"s", vec_to_json(o.segment.s)},
                                   {"e", vec_to_json(o.segment.e)}});
  }
  obs["line_ref_keyframe"] = scene.line_ref_keyframe;

  json initial;
  initial["poses"] = json::array();
  for (const auto& p : scene.init_poses_cw) initial["poses"].push_back(pose_to_json(p));
  initial["points"] = json::array();
  for (const auto& p : scene.init_points) initial["points"].push_back(vec_to_json(p));
  initial["lines"] = json::array();
  for (const auto& l : scene.init_lines) {
    initial["lines"].push_back(json{{"n", vec_to_json(l.n)}, {"v", vec_to_json(l.v)}});
  }
  initial["axes"] = json::array();
  for (const auto& a : scene.init_axes) initial["axes"].push_back(vec_to_json(a));

  json root;
  root["format"] = "axisline-scene";
  root["version"] = 1;
  root["config"] = config_to_json(scene.config);
  root["intrinsics"] = json{{"fx", scene.intrinsics.fx},
                            {"fy", scene.intrinsics.fy},
                            {"cx", scene.intrinsics.cx},
                            {"cy", scene.intrinsics.cy}};
  root["truth"] = truth;
  root["observations"] = obs;
  root["initial"] = initial;
  return root.dump(2) + "\n";
}

Scene scene_from_json(const std::string& text) {
  const json root = json::parse(text);
  if (root.at("format").get<std::string>() != "axisline-scene") {
    throw std::invalid_argument("not an axisline scene file");
  }
  Scene scene;
  scene.config = config_from_json(root.at("config"));
  const json& k = root.at("intrinsics");
  scene.intrinsics = CameraIntrinsics{k.at("fx").get<double>(), k.at("fy").get<double>(),
                                      k.at("cx").get<double>(), k.at("cy").get<double>()};

  const json& truth = root.at("truth");
  for (const auto& j : truth.at("poses")) scene.true_poses_cw.push_back(pose_from_json(j));
  for (const auto& j : truth.at("axes")) scene.true_axes.push_back(vec3_from_json(j));
  for (const auto& j : truth.at("points")) scene.true_points.push_back(vec3_from_json(j));
  for (const auto& j : truth.at("lines")) {
    TrueLine l;
    l.axis_id = j.at("axis").get<int>();
    l.p1 = vec3_from_json(j.at("p1"));
    l.p2 = vec3_from_json(j.at("p2"));
    l.line = plucker_from_points(l.p1, l.p2);
    scene.true_lines.push_back(l);
  }

  const json& obs = root.at("observations");
  for (const auto& j : obs.at("points")) {
    scene.point_obs.push_back(
        {j.at("pose").get<int>(), j.at("point").get<int>(), vec2_from_json(j.at("uv"))});
  }
  for (const auto& j : obs.at("segments")) {
    scene.segment_obs.push_back({j.at("pose").get<int>(), j.at("line").get<int>(),
                                 Segment2D{vec2_from_json(j.at("s")), vec2_from_json(j.at("e"))}});
  }
  scene.line_ref_keyframe = obs.at("line_ref_keyframe").get<std::vector<int>>();

  const json& initial = root.at("initial");
  for (const auto& j : initial.at("poses")) scene.init_poses_cw.push_back(pose_from_json(j));
  for (const auto& j : initial.at("points")) scene.init_points.push_back(vec3_from_json(j));
  for (const auto& j : initial.at("lines")) {
    scene.init_lines.push_back(PluckerLine{vec3_from_json(j.at("n")), vec3_from_json(j.at("v"))});
  }
  for (const auto& j : initial.at("axes")) scene.init_axes.push_back(vec3_from_json(j));
  return scene;
}

std::vector<std::pair<int, Segment2D>> segments_from_json(const std::string& text) {
  const json root = json::parse(text);
  std::vector<std::pair<int, Segment2D>> out;
  for (const auto& j : root) {
    out.emplace_back(j.at("id").get<int>(),
                     Segment2D{vec2_from_json(j.at("s")), vec2_from_json(j.at("e"))});
  }
  return out;
}

std::string segments_to_json(const std::vector<std::pair<int, Segment2D>>& segments) {
  json root = json::array();
  for (const auto& [id, seg] : segments) {
    root.push_back(json{{"id", id}, {"s", vec_to_json(seg.s)}, {"e", vec_to_json(seg.e)}});
  }
  return root.dump(2) + "\n";
}

std::string vp_result_to_json(const VPResult& result, const std::vector<int>& segment_ids) {
  json vps = json::array();
  for (const auto& [label, vp] : result.labeled_vps()) vps.push_back(vec_to_json(vp));
  json classes = json::object();
  for (const auto& [index, label] : result.classes) {
    const int id = index < static_cast<int>(segment_ids.size())
                       ? segment_ids[static_cast<size_t>(index)]
                       : index;
    classes[std::to_string(id)] = to_string(label);
  }
  return json{{"vps", vps}, {"classes", classes}}.dump(2) + "\n";
}

std::string report_to_json(const OptimizationReport& report) {
  json j;
  j["initial_cost"] = report.initial_cost;
  j["final_cost"] = report.final_cost;
  j["iterations"] = report.iterations;
  j["wall_time_s"] = report.wall_time_s;
  j["converged"] = report.converged;
  j["diverged"] = report.diverged;
  j["cost_monotone"] = report.cost_monotone;
  j["termination"] = report.termination;
  j["cost_trace"] = report.cost_trace;
  j["iteration_times_s"] = report.iteration_times_s;
  j["dropped_residuals"] = report.dropped_residuals;
  j["parameter_counts"] = json{{"total_columns", report.total_columns},
                               {"line_related_columns", report.line_related_columns}};
  return j.dump(2) + "\n";
}

std::string bench_report_to_json(const BenchReport& report) {
  json cells = json::array();
  for (const auto& res : report.results) {
    cells.push_back(json{{"scenario", to_string(res.scenario)},
                         {"param", to_string(res.param)},
                         {"time_s", res.time_seconds},
                         {"error_l", res.error_l},
                         {"trans_rmse", res.trans_rmse},
                         {"seeds", res.n_seeds},
                         {"diverged", res.n_diverged}});
  }
  return json{{"cells", cells}}.dump(2) + "\n";
}

}  // namespace axisline
