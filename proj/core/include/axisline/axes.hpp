#pragma once

#include "axisline/geometry.hpp"

#include <map>
#include <set>
#include <utility>
#include <vector>

namespace axisline {

/// Paper constant: a candidate axis closer than this to an existing axis is
/// the same axis. Also used to collapse duplicate mean-shift modes.
inline constexpr double kAxisMergeAngleDeg = 10.0;

/// Paper constant: new axes are created only while the non-structural to
/// structural line count ratio in the local map exceeds this.
inline constexpr double kUnstructuredRatio = 0.6;

/// A shared direction with lifecycle state. dir holds the optimized
/// latitude/longitude; prior_dir is the direction at creation or at the last
/// accepted post-BA update and anchors the axis residual.
struct PrincipalAxis {
  int id = -1;
  AxisDirection dir;
  Eigen::Vector3d prior_dir = Eigen::Vector3d::UnitZ();
  int change_count = 0;
  std::map<int, double> member_lines;  // line id -> association weight

  Eigen::Vector3d direction() const { return direction_from_latlong(dir); }
};

/// Soft line-axis association weights. Rows (per line) are convex: they sum
/// to 1, or are absent entirely with the line flagged unassociated.
struct AssociationTable {
  std::map<std::pair<int, int>, double> weights;  // (line id, axis id) -> w
  std::set<int> unassociated;

  double weight(int line_id, int axis_id) const {
    const auto it = weights.find({line_id, axis_id});
    return it == weights.end() ? 0.0 : it->second;
  }
  bool is_unassociated(int line_id) const { return unassociated.count(line_id) > 0; }
};

struct MeanShiftConfig {
  double bandwidth_deg = 15.0;        // tau_d, neighborhood angle
  double kernel_c = 1.0 / (2 * 25.0); // Gaussian sharpness, 1/deg^2 (sigma 5 deg)
  int max_iters = 50;
  double convergence_deg = 0.1;
};

struct AxisPolicy {
  int creation_threshold = 20;                    // tau_n, unclassified lines
  double merge_angle_deg = kAxisMergeAngleDeg;
  double unstructured_ratio = kUnstructuredRatio;
  double update_angle_deg = 2.0;                  // tau_diff
  int max_changes = 3;                            // deletions after this many large updates
  double gate_angle_deg = 15.0;                   // association gate
  double assoc_sigma_deg = 5.0;                   // sigma of the zero-mean angle model
};

/// Mode seeking on the projective sphere (a direction and its negation are the
/// same axis). Each input seeds an iteration of the kernel-weighted neighbor
/// mean; converged modes within kAxisMergeAngleDeg collapse to one.
/// Throws std::invalid_argument ("no-candidates") on empty input.
std::vector<Eigen::Vector3d> mean_shift_directions(const std::vector<Eigen::Vector3d>& dirs,
                                                   const MeanShiftConfig& cfg);

/// Candidate axes from the unclassified lines, gated by the creation
/// threshold and the unstructured ratio, pruned against existing axes, and
/// ordered best first (smallest mean angular distance to supporting lines,
/// ties by larger support). New ids continue after the largest existing id.
std::vector<PrincipalAxis> propose_axes(
    const std::vector<std::pair<int, Eigen::Vector3d>>& unclassified,
    const std::vector<PrincipalAxis>& existing, double local_ratio, const AxisPolicy& policy,
    const MeanShiftConfig& cfg);

/// Per-line mean angle (degrees) between the line's vanishing-point direction
/// and each axis, averaged over the frames observing the line.
struct LineAxisAngles {
  int line_id = -1;
  std::vector<double> angle_deg;  // aligned with the axes argument of associate()
};

/// Gated normal-model weights: pairs beyond the gate get exactly zero, the
/// rest exp(-angle^2 / (2 sigma^2)) normalized per line. Lines with every
/// pair gated carry no weights and are flagged unassociated.
AssociationTable associate(const std::vector<LineAxisAngles>& lines,
                           const std::vector<PrincipalAxis>& axes, const AxisPolicy& policy);

struct AxisUpdateResult {
  std::vector<PrincipalAxis> axes;
  std::vector<int> deleted_ids;
  std::vector<int> orphaned_lines;  // members of deleted axes, to re-associate
};

/// Post-BA lifecycle: adopt the optimized direction only when it moved more
/// than update_angle_deg from the prior (counting the change), delete axes
/// that changed too often, and merge adjacent axes by deleting the
/// later-detected (larger id) one. Throws std::runtime_error
/// ("inconsistent-graph") when post_ba_dirs misses an axis.
AxisUpdateResult update_axes(const std::vector<PrincipalAxis>& axes,
                             const std::map<int, AxisDirection>& post_ba_dirs,
                             const AxisPolicy& policy);

}  // namespace axisline
