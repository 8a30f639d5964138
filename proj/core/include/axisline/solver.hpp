#pragma once

#include "axisline/factor_graph.hpp"

#include <string>
#include <vector>

namespace axisline {

struct LMConfig {
  int max_iters = 100;
  double initial_lambda = 1e-4;
  double lambda_up = 10.0;
  double lambda_down = 10.0;
  double max_lambda = 1e12;
  double rel_cost_tol = 1e-12;   // relative cost decrease
  double param_tol = 1e-14;      // accepted step norm
  double gradient_tol = 1e-14;   // infinity norm of the gradient
  double cost_floor = 1e-18;     // absolute cost below which we stop
  double robust_width_px = 2.0;  // Huber width on pixel residual blocks
};

struct OptimizationReport {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;           // accepted steps
  double wall_time_s = 0.0;
  bool converged = false;
  bool diverged = false;        // non-finite cost encountered
  bool cost_monotone = true;    // accepted steps never increased cost
  std::string termination;
  std::vector<double> cost_trace;        // initial cost plus one entry per accepted step
  std::vector<double> iteration_times_s;
  int dropped_residuals = 0;
  int total_columns = 0;
  int line_related_columns = 0;
};

/// Levenberg-Marquardt with Marquardt (diagonal) damping over the normal
/// equations, accumulated block-wise. The graph is updated in place; steps are
/// accepted only when they strictly decrease the robustified cost, and steps
/// that would push an anchored inverse depth to or below zero are rescaled to
/// keep it positive.
OptimizationReport solve(FactorGraph& graph, const LMConfig& cfg = {});

}  // namespace axisline
