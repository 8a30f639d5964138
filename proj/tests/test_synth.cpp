#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "axisline/benchmark.hpp"
#include "axisline/pipeline.hpp"
#include "axisline/serialization.hpp"
#include "axisline/rng.hpp"

#include <cmath>
#include <sstream>

using namespace axisline;

namespace {

SceneConfig small_config() {
  SceneConfig cfg;
  cfg.n_axes = 2;
  cfg.lines_per_axis = 8;
  cfg.n_points = 20;
  cfg.n_poses = 6;
  return cfg;
}

double deg2rad(double d) { return d * M_PI / 180.0; }

}  // namespace

TEST_CASE("generate_scene is deterministic") {
  const SceneConfig cfg = small_config().with_seed(42);
  const std::string a = scene_to_json(generate_scene(cfg));
  const std::string b = scene_to_json(generate_scene(cfg));
  CHECK(a == b);

  const std::string c = scene_to_json(generate_scene(cfg.with_seed(43)));
  CHECK(a != c);
}

TEST_CASE("scene serialization round trip is byte-identical") {
  const Scene scene = generate_scene(small_config().with_seed(7));
  const std::string once = scene_to_json(scene);
  const std::string twice = scene_to_json(scene_from_json(once));
  CHECK(once == twice);
}

TEST_CASE("noiseless scene starts at zero cost in every parameterization") {
  SceneConfig cfg = SceneConfig::noiseless();
  cfg.n_axes = 2;
  cfg.lines_per_axis = 8;
  cfg.n_points = 15;
  cfg.n_poses = 6;
  const Scene scene = generate_scene(cfg.with_seed(5));
  for (const Parameterization p :
       {Parameterization::TwoParam, Parameterization::ThreeParam, Parameterization::FourParam}) {
    FactorGraph g = build_graph(scene, p);
    CHECK(evaluate_cost(g) < 1e-18);
    const OptimizationReport report = solve(g);
    CHECK(report.final_cost < 1e-18);
  }
}

TEST_CASE("pixel noise shows up as unit residual std at ground truth") {
  SceneConfig cfg = SceneConfig::noiseless();
  cfg.n_axes = 2;
  cfg.lines_per_axis = 8;
  cfg.n_points = 30;
  cfg.n_poses = 8;
  cfg.pixel_noise_sigma = 1.0;

  double sum_sq = 0.0;
  int count = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Scene scene = generate_scene(cfg.with_seed(seed));
    FactorGraph g = build_graph(scene, Parameterization::FourParam);
    // Evaluate at exact ground truth.
    size_t k = 0;
    for (auto& [id, pose] : g.poses) pose.pose_cw = scene.true_poses_cw[k++];
    size_t pi = 0;
    for (auto& [id, point] : g.points) point.position = scene.true_points[pi++];
    for (auto& [id, line] : g.lines) {
      line.ortho = ortho_from_plucker(scene.true_lines[static_cast<size_t>(id)].line);
    }
    const Linearization lin = linearize(g);
    sum_sq += lin.residuals.squaredNorm();
    count += static_cast<int>(lin.residuals.size());
  }
  const double std_dev = std::sqrt(sum_sq / count);
  CHECK(std_dev == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("error_l metric") {
  const PluckerLine l = plucker_from_points({0, 1, 0}, {1, 1, 0});
  std::map<int, PluckerLine> truth = {{0, l}};

  SUBCASE("identical lines give zero") {
    CHECK(error_l({{0, l}}, truth) == 0.0);
  }
  SUBCASE("projective scaling is free") {
    const PluckerLine scaled{7.0 * l.n, 7.0 * l.v};
    CHECK(error_l({{0, scaled}}, truth) < 1e-15);
  }
  SUBCASE("one-degree direction change matches the closed form") {
    // Truth: direction x through (0,1,0); estimate: direction rotated by one
    // degree about z through the same point.
    const double a = deg2rad(1.0);
    const Eigen::Vector3d v(std::cos(a), std::sin(a), 0.0);
    const PluckerLine rotated{Eigen::Vector3d(0, 1, 0).cross(v), v};

    const Eigen::Matrix<double, 6, 1> lhs = normalized_plucker(rotated);
    Eigen::Matrix<double, 6, 1> expected_raw;
    // Hand evaluation: L_rot = ((0,0,-cos a), (cos a, sin a, 0)) with norm
    // sqrt(1 + cos^2 a); truth L = ((0,0,-1),(1,0,0)) / sqrt(2).
    const double norm_rot = std::sqrt(1.0 + std::cos(a) * std::cos(a));
    expected_raw << 0, 0, -std::cos(a) / norm_rot, std::cos(a) / norm_rot,
        std::sin(a) / norm_rot, 0;
    CHECK((lhs - expected_raw).norm() < 1e-12);

    Eigen::Matrix<double, 6, 1> truth_vec;
    truth_vec << 0, 0, -1 / std::sqrt(2.0), 1 / std::sqrt(2.0), 0, 0;
    const double expected = (expected_raw - truth_vec).norm();
    CHECK(error_l({{0, rotated}}, truth) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("id mismatch throws") {
    CHECK_THROWS_AS(error_l({{1, l}}, truth), std::invalid_argument);
  }
}

TEST_CASE("trans_rmse metric") {
  const Scene scene = generate_scene(small_config().with_seed(3));
  std::vector<Pose> est = scene.true_poses_cw;
  std::vector<bool> fixed(est.size(), false);
  fixed[0] = true;

  CHECK(trans_rmse(est, scene.true_poses_cw, fixed) == 0.0);

  // Shift every free camera center by 0.1 along x.
  for (size_t k = 1; k < est.size(); ++k) {
    Pose wc = est[k].inverse();
    wc.translation.x() += 0.1;
    est[k] = wc.inverse();
  }
  CHECK(trans_rmse(est, scene.true_poses_cw, fixed) == doctest::Approx(0.1).epsilon(1e-9));

  // Randomized offsets against an independent recomputation.
  Rng rng(77);
  double sum_sq = 0.0;
  for (size_t k = 1; k < est.size(); ++k) {
    const Eigen::Vector3d offset = rng.gaussian3(0.2);
    Pose wc = scene.true_poses_cw[k].inverse();
    wc.translation += offset;
    est[k] = wc.inverse();
    sum_sq += offset.squaredNorm();
  }
  const double expected = std::sqrt(sum_sq / static_cast<double>(est.size() - 1));
  CHECK(trans_rmse(est, scene.true_poses_cw, fixed) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("line-related parameter counts follow the closed forms") {
  const Scene scene = generate_scene(small_config().with_seed(9));
  const int n = static_cast<int>(scene.true_lines.size());
  const int n_axes = static_cast<int>(scene.true_axes.size());

  CHECK(GraphIndex::build(build_graph(scene, Parameterization::ThreeParam)).line_related_cols ==
        n + 2 * n_axes);
  CHECK(GraphIndex::build(build_graph(scene, Parameterization::FourParam)).line_related_cols ==
        4 * n);
  CHECK(GraphIndex::build(build_graph(scene, Parameterization::TwoParam)).line_related_cols ==
        2 * n);
}

TEST_CASE("single-pose scene has no usable observations") {
  SceneConfig cfg = small_config();
  cfg.n_poses = 1;
  CHECK_THROWS_AS(generate_scene(cfg), std::runtime_error);
}

TEST_CASE("run_benchmark produces a full deterministic grid") {
  BenchOptions options;
  options.scene = small_config();
  options.scenarios = {Scenario::FixedPose, Scenario::SmallNoise};
  options.n_seeds = 2;

  const BenchReport a = run_benchmark(options);
  CHECK(a.cells.size() == 2u * 3u * 2u);
  CHECK(a.results.size() == 2u * 3u);

  const BenchReport b = run_benchmark(options);
  for (size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].error_l == b.cells[i].error_l);
    CHECK(a.cells[i].trans_rmse == b.cells[i].trans_rmse);
    CHECK(a.cells[i].seed == b.cells[i].seed);
  }

  const std::string csv = bench_csv(a);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "scenario,param,seed,time_s,error_l,trans_rmse");
  int rows = 0;
  for (std::string row; std::getline(lines, row);) ++rows;
  CHECK(rows == static_cast<int>(a.cells.size()));

  for (const auto& cell : a.cells) {
    CHECK(cell.cost_monotone);
    CHECK(!cell.diverged);
  }
}

TEST_CASE("scenario monotonicity of pose error") {
  BenchOptions options;
  options.scene = small_config();
  options.params = {Parameterization::ThreeParam};
  options.n_seeds = 4;
  const BenchReport report = run_benchmark(options);
  double fixed = 0, small = 0, large = 0;
  for (const auto& res : report.results) {
    if (res.scenario == Scenario::FixedPose) fixed = res.trans_rmse;
    if (res.scenario == Scenario::SmallNoise) small = res.trans_rmse;
    if (res.scenario == Scenario::LargeNoise) large = res.trans_rmse;
  }
  CHECK(fixed <= small + 1e-12);
  CHECK(small <= large + 1e-12);
}

TEST_CASE("association rounds recover planted axes from unassociated lines") {
  SceneConfig cfg;
  cfg.n_axes = 2;
  cfg.lines_per_axis = 12;
  cfg.n_points = 25;
  cfg.n_poses = 8;
  cfg.axis_angular_spread_deg = 1.0;
  cfg.line_init_noise = 0.05;
  cfg.pixel_noise_sigma = 0.5;
  cfg = cfg.with_scenario(Scenario::SmallNoise).with_seed(21);
  const Scene scene = generate_scene(cfg);

  // Start from stage one: anchored to per-line temporary directions, no axes.
  FactorGraph g = build_graph(scene, Parameterization::ThreeParam);
  g.axes.clear();
  g.association.weights.clear();
  for (auto& [id, line] : g.lines) {
    line.stage = LineStage::InitialTempAxis;
    line.axis_ref = -1;
    line.temp_axis_dir = scene.init_lines[static_cast<size_t>(id)].v.normalized();
    line.optimized_once = false;
  }

  EMConfig em;
  em.rounds = 3;
  const EMReport report = run_association_rounds(g, em);

  REQUIRE(g.axes.size() == scene.true_axes.size());
  for (const auto& truth : scene.true_axes) {
    double best = 1e9;
    for (const auto& [id, axis] : g.axes) {
      best = std::min(best, projective_angle(axis.direction(), truth));
    }
    CHECK(best < deg2rad(2.0));
  }

  int anchored = 0;
  for (const auto& [id, line] : g.lines) {
    anchored += line.stage == LineStage::AxisAnchored ? 1 : 0;
  }
  CHECK(anchored >= static_cast<int>(0.9 * static_cast<double>(g.lines.size())));

  const double final_error = error_l(estimated_lines(g), scene.true_line_map());
  CHECK(final_error < 0.05);
  for (const auto& round : report.rounds) {
    CHECK(round.opt.cost_monotone);
  }
}
