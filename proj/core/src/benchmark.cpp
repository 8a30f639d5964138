#include "axisline/benchmark.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace axisline {

namespace {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("AXISLINE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

}  // namespace

BenchCell run_cell(const Scene& scene, Parameterization param, const LMConfig& lm) {
  BenchCell cell;
  cell.param = param;
  cell.seed = scene.config.seed;

  FactorGraph graph = build_graph(scene, param);
  const auto t0 = std::chrono::steady_clock::now();
  const OptimizationReport report = solve(graph, lm);
  cell.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  cell.iterations = report.iterations;
  cell.final_cost = report.final_cost;
  cell.cost_monotone = report.cost_monotone;
  cell.line_related_columns = report.line_related_columns;
  cell.error_l = error_l(estimated_lines(graph), scene.true_line_map());
  cell.trans_rmse = trans_rmse(graph, scene);
  cell.diverged = report.diverged || !std::isfinite(cell.error_l) ||
                  !std::isfinite(cell.trans_rmse) || !std::isfinite(report.final_cost);
  return cell;
}

BenchReport run_benchmark(const BenchOptions& options) {
  struct Job {
    Scenario scenario;
    Parameterization param;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const Scenario scenario : options.scenarios) {
    for (const Parameterization param : options.params) {
      for (int s = 0; s < options.n_seeds; ++s) {
        jobs.push_back({scenario, param, options.base_seed + static_cast<std::uint64_t>(s)});
      }
    }
  }

  BenchReport report;
  report.cells.resize(jobs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
      const Job& job = jobs[i];
      const Scene scene =
          generate_scene(options.scene.with_scenario(job.scenario).with_seed(job.seed));
      BenchCell cell = run_cell(scene, job.param, options.lm);
      cell.scenario = job.scenario;
      report.cells[i] = cell;
    }
  };
  const int n_threads = std::min<int>(resolve_threads(options.threads),
                                      static_cast<int>(jobs.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const Scenario scenario : options.scenarios) {
    for (const Parameterization param : options.params) {
      BenchResult res;
      res.scenario = scenario;
      res.param = param;
      int used = 0;
      for (const auto& cell : report.cells) {
        if (cell.scenario != scenario || cell.param != param) continue;
        ++res.n_seeds;
        if (cell.diverged) {
          ++res.n_diverged;
          continue;
        }
        res.time_seconds += cell.time_s;
        res.error_l += cell.error_l;
        res.trans_rmse += cell.trans_rmse;
        ++used;
      }
      if (used > 0) {
        res.time_seconds /= used;
        res.error_l /= used;
        res.trans_rmse /= used;
      }
      report.results.push_back(res);
    }
  }
  return report;
}

std::string bench_csv(const BenchReport& report) {
  std::ostringstream out;
  out << "scenario,param,seed,time_s,error_l,trans_rmse\n";
  out.precision(9);
  for (const auto& cell : report.cells) {
    out << to_string(cell.scenario) << ',' << to_string(cell.param) << ',' << cell.seed << ','
        << cell.time_s << ',' << cell.error_l << ',' << cell.trans_rmse << '\n';
  }
  return out.str();
}

std::string bench_grid(const BenchReport& report) {
  std::vector<Scenario> scenarios;
  std::vector<Parameterization> params;
  for (const auto& res : report.results) {
    if (std::find(scenarios.begin(), scenarios.end(), res.scenario) == scenarios.end()) {
      scenarios.push_back(res.scenario);
    }
    if (std::find(params.begin(), params.end(), res.param) == params.end()) {
      params.push_back(res.param);
    }
  }
  auto find = [&](Scenario s, Parameterization p) -> const BenchResult* {
    for (const auto& res : report.results) {
      if (res.scenario == s && res.param == p) return &res;
    }
    return nullptr;
  };

  std::ostringstream out;
  out << "Metric    ";
  for (const Scenario s : scenarios) {
    for (const Parameterization p : params) {
      char head[32];
      std::snprintf(head, sizeof(head), "%5s/%-3s", to_string(s).c_str(),
                    to_string(p).c_str());
      out << ' ' << head;
    }
  }
  out << '\n';
  const char* metric_names[3] = {"Time_s   ", "Error_l  ", "Trans.   "};
  for (int m = 0; m < 3; ++m) {
    out << metric_names[m];
    for (const Scenario s : scenarios) {
      for (const Parameterization p : params) {
        const BenchResult* res = find(s, p);
        double value = 0.0;
        if (res) {
          value = m == 0 ? res->time_seconds : m == 1 ? res->error_l : res->trans_rmse;
        }
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%9.4f", value);
        out << ' ' << buf;
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace axisline
