#include "axisline/solver.hpp"

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>

namespace axisline {

namespace {

/// Normal equations accumulated block-wise; much cheaper than forming the
/// dense Jacobian when blocks touch few columns.
void accumulate_normal_equations(const FactorGraph& g, const GraphIndex& idx,
                                 const RobustKernel& kernel, Eigen::MatrixXd& h,
                                 Eigen::VectorXd& grad, EvalStats* stats) {
  h.setZero(idx.total_cols, idx.total_cols);
  grad.setZero(idx.total_cols);
  for_each_residual(
      g, idx, true,
      [&](const ResidualBlock& b) {
        const double scale = b.robust ? kernel.sqrt_weight(b.r.norm()) : 1.0;
        const double s_sq = scale * scale;
        for (int i = 0; i < b.n_parts; ++i) {
          const auto& pi = b.parts[static_cast<size_t>(i)];
          const auto ji = pi.jac.leftCols(pi.dim);
          grad.segment(pi.col, pi.dim) += s_sq * (ji.transpose() * b.r);
          for (int j = 0; j < b.n_parts; ++j) {
            const auto& pj = b.parts[static_cast<size_t>(j)];
            h.block(pi.col, pj.col, pi.dim, pj.dim) +=
                s_sq * (ji.transpose() * pj.jac.leftCols(pj.dim));
          }
        }
      },
      stats);
}

/// Largest step fraction that keeps every anchored inverse depth at or above
/// 10% of its current value.
double feasible_step_fraction(const FactorGraph& g, const GraphIndex& idx,
                              const Eigen::VectorXd& delta) {
  double alpha = 1.0;
  for (const auto& [id, entry] : idx.line_cols) {
    const LineVertex& line = g.lines.at(id);
    if (line.stage != LineStage::InitialTempAxis && line.stage != LineStage::AxisAnchored) {
      continue;
    }
    const double dr = delta(entry.offset);
    if (dr < 0.0 && line.inv_depth + dr < 0.1 * line.inv_depth) {
      alpha = std::min(alpha, 0.9 * line.inv_depth / (-dr));
    }
  }
  return alpha;
}

}  // namespace

OptimizationReport solve(FactorGraph& graph, const LMConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  OptimizationReport report;
  const RobustKernel kernel{cfg.robust_width_px};
  const GraphIndex idx = GraphIndex::build(graph);
  report.total_columns = idx.total_cols;
  report.line_related_columns = idx.line_related_cols;

  EvalStats stats;
  double cost = evaluate_cost(graph, kernel, &stats);
  report.dropped_residuals = stats.total();
  report.initial_cost = cost;
  report.cost_trace.push_back(cost);

  if (!std::isfinite(cost)) {
    report.diverged = true;
    report.termination = "non-finite initial cost";
    report.final_cost = cost;
    return report;
  }

  Eigen::MatrixXd h;
  Eigen::VectorXd grad;
  double lambda = cfg.initial_lambda;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const auto t_iter = std::chrono::steady_clock::now();
    if (cost < cfg.cost_floor) {
      report.converged = true;
      report.termination = "cost floor";
      break;
    }
    accumulate_normal_equations(graph, idx, kernel, h, grad, &stats);
    report.dropped_residuals = std::max(report.dropped_residuals, stats.total());
    if (grad.size() == 0 || grad.lpNorm<Eigen::Infinity>() < cfg.gradient_tol) {
      report.converged = true;
      report.termination = "gradient";
      break;
    }

    bool accepted = false;
    while (lambda <= cfg.max_lambda) {
      Eigen::MatrixXd damped = h;
      damped.diagonal() += lambda * h.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd delta = damped.ldlt().solve(-grad);
      if (!delta.allFinite()) {
        lambda *= cfg.lambda_up;
        continue;
      }
      const double alpha = feasible_step_fraction(graph, idx, delta);
      FactorGraph candidate = graph;
      apply_increment(candidate, idx, alpha * delta);
      const double new_cost = evaluate_cost(candidate, kernel);
      if (!std::isfinite(new_cost)) {
        // Trial state blew up; damp harder and keep the best-so-far state.
        lambda *= cfg.lambda_up;
        continue;
      }
      if (new_cost < cost) {
        graph = std::move(candidate);
        const double rel_drop = (cost - new_cost) / std::max(cost, 1e-300);
        const double step_norm = alpha * delta.norm();
        cost = new_cost;
        report.cost_trace.push_back(cost);
        ++report.iterations;
        lambda = std::max(lambda / cfg.lambda_down, 1e-12);
        accepted = true;
        if (rel_drop < cfg.rel_cost_tol) {
          report.converged = true;
          report.termination = "relative cost";
        } else if (step_norm < cfg.param_tol) {
          report.converged = true;
          report.termination = "step size";
        }
        break;
      }
      lambda *= cfg.lambda_up;
    }
    report.iteration_times_s.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_iter).count());
    if (!accepted) {
      if (report.termination.empty()) report.termination = "stalled";
      break;
    }
    if (report.converged) break;
  }

  if (report.termination.empty()) report.termination = "max iterations";
  for (size_t i = 1; i < report.cost_trace.size(); ++i) {
    if (report.cost_trace[i] > report.cost_trace[i - 1]) report.cost_monotone = false;
  }
  report.final_cost = cost;
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

}  // namespace axisline
