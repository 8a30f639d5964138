#pragma once

#include "axisline/factor_graph.hpp"
#include "axisline/solver.hpp"

#include <optional>
#include <vector>

namespace axisline {

/// Inverse depth along the back-projection ray of anchor_pixel (in the
/// reference camera) at the point closest to the given world line. Empty when
/// the line is parallel to the ray or meets it behind the camera.
std::optional<double> anchor_ray_inv_depth(const PluckerLine& l_w,
                                           const Eigen::Vector2d& anchor_pixel,
                                           const Pose& ref_pose_cw, const CameraIntrinsics& k);

struct StageTransition {
  int line_id = -1;
  LineStage from = LineStage::InitialTempAxis;
  LineStage to = LineStage::InitialTempAxis;
};

/// Three-stage policy over all lines in the graph:
///  - fresh lines stay in InitialTempAxis until their first optimization;
///  - optimized InitialTempAxis lines move to OrthoFallback, or directly to
///    AxisAnchored when they already carry an association weight;
///  - OrthoFallback lines with an association weight convert to AxisAnchored
///    by intersecting the line with the anchor back-projection ray; a failed
///    conversion leaves the line in OrthoFallback.
std::vector<StageTransition> stage_policy(FactorGraph& g);

struct EMConfig {
  int rounds = 3;
  AxisPolicy axis_policy;
  MeanShiftConfig mean_shift;
  LMConfig lm;
};

struct EMRoundReport {
  int new_axes = 0;
  std::vector<int> deleted_axes;
  std::vector<StageTransition> transitions;
  OptimizationReport opt;
};

struct EMReport {
  std::vector<EMRoundReport> rounds;
};

/// Alternating association and optimization: propose axes from unassociated
/// lines, recompute association weights, apply the stage policy, solve, then
/// run the axis update/deletion pass. Mirrors the E/M split of the weighted
/// objective.
EMReport run_association_rounds(FactorGraph& g, const EMConfig& cfg);

}  // namespace axisline
