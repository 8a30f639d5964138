#pragma once

#include "axisline/scene.hpp"
#include "axisline/solver.hpp"

#include <string>
#include <vector>

namespace axisline {

/// One (scenario, parameterization, seed) run.
struct BenchCell {
  Scenario scenario = Scenario::FixedPose;
  Parameterization param = Parameterization::ThreeParam;
  std::uint64_t seed = 0;
  double time_s = 0.0;     // solve call only
  double error_l = 0.0;
  double trans_rmse = 0.0;
  bool diverged = false;
  bool cost_monotone = true;
  int iterations = 0;
  double final_cost = 0.0;
  int line_related_columns = 0;
};

/// Per (scenario, parameterization) means over seeds; diverged cells are
/// excluded from the means and counted.
struct BenchResult {
  Scenario scenario = Scenario::FixedPose;
  Parameterization param = Parameterization::ThreeParam;
  double time_seconds = 0.0;
  double error_l = 0.0;
  double trans_rmse = 0.0;
  int n_seeds = 0;
  int n_diverged = 0;
};

struct BenchReport {
  std::vector<BenchCell> cells;
  std::vector<BenchResult> results;
};

struct BenchOptions {
  SceneConfig scene;
  LMConfig lm;
  std::vector<Scenario> scenarios = {Scenario::FixedPose, Scenario::SmallNoise,
                                     Scenario::LargeNoise};
  std::vector<Parameterization> params = {Parameterization::TwoParam, Parameterization::FourParam,
                                          Parameterization::ThreeParam};
  int n_seeds = 10;
  std::uint64_t base_seed = 1;
  int threads = 0;  // 0: AXISLINE_THREADS env var, defaulting to 1
};

/// Runs one cell on a pre-built scene. Exposed for tests and the scene-file
/// replay path of the CLI.
BenchCell run_cell(const Scene& scene, Parameterization param, const LMConfig& lm);

/// Full grid: for every scenario x parameterization x seed, generate the
/// scene, build the graph, solve, and record wall time, error_l and
/// trans_rmse. Deterministic given options (times excepted). Cells may run in
/// parallel, capped by BenchOptions::threads.
BenchReport run_benchmark(const BenchOptions& options);

/// CSV rows "scenario,param,seed,time_s,error_l,trans_rmse".
std::string bench_csv(const BenchReport& report);

/// Fixed-width grid of the aggregated means, one row per metric.
std::string bench_grid(const BenchReport& report);

}  // namespace axisline
