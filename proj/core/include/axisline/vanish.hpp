#pragma once

#include "axisline/geometry.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace axisline {

/// One rotated orthonormal frame hypothesis: (d_v, d_h rotated by theta_i
/// about d_v, and their cross product). theta_index runs 1..360 (degrees).
struct VPProposal {
  std::array<Eigen::Vector3d, 3> dirs;
  int theta_index = 0;
};

enum class SegmentClass { Vertical, Horizontal0, Horizontal1, Unstructured };

std::string to_string(SegmentClass c);
std::optional<SegmentClass> segment_class_from_string(const std::string& s);

/// Refined vanishing points (homogeneous pixel coordinates) and the final
/// per-segment classification, keyed by segment index in the input order.
struct VPResult {
  std::optional<Eigen::Vector3d> vp_vertical;
  std::optional<Eigen::Vector3d> vp_h0;
  std::optional<Eigen::Vector3d> vp_h1;
  std::map<int, SegmentClass> classes;

  std::vector<std::pair<SegmentClass, Eigen::Vector3d>> labeled_vps() const;
};

struct VPTolerances {
  double angle_tol_deg = 2.0;  // proposal scoring / coarse clustering
  double dist_tol_px = 3.0;    // refined VP to segment line distance
};

/// Horizontal seed perpendicular to a unit vertical: with
/// d_v = [sin a sin b, sin a cos b, cos a], returns [cos b, -sin b, 0].
/// At the pole (a = 0) the convention is b = 0, giving (1, 0, 0).
Eigen::Vector3d horizontal_seed(const Eigen::Vector3d& d_v);

/// All 360 one-degree rotations of the horizontal seed about d_v.
std::vector<VPProposal> generate_proposals(const Eigen::Vector3d& d_v);

/// Number of segments consistent with any of the proposal's three vanishing
/// points: a segment counts when the angle between its direction and the
/// direction from its midpoint toward the VP is within angle_tol_deg.
int score_proposal(const VPProposal& p, const std::vector<Segment2D>& segments,
                   const CameraIntrinsics& k, double angle_tol_deg);

/// Least-squares intersection of the segments' infinite lines: the right
/// singular vector of the smallest singular value of M, rows s~ x e~
/// normalized to unit norm. Throws std::invalid_argument ("underdetermined")
/// for fewer than two segments and std::domain_error ("degenerate-cluster")
/// when every segment lies on one line.
Eigen::Vector3d refine_vp(const std::vector<Segment2D>& cluster);

/// Consistency of a homogeneous VP with a segment: the larger endpoint
/// distance to the line joining the VP and the segment midpoint, in pixels.
/// Homogeneous in the VP, so points at infinity need no special case.
bool vp_consistent(const Eigen::Vector3d& vp, const Segment2D& seg, const VPTolerances& tol,
                   double* measure = nullptr);

/// Assign each segment to the nearest consistent VP (ties by smaller measure,
/// then lower index in vps); inconsistent segments are Unstructured.
std::map<int, SegmentClass> classify_segments(
    const std::vector<Segment2D>& segments,
    const std::vector<std::pair<SegmentClass, Eigen::Vector3d>>& vps, const VPTolerances& tol);

/// Full per-frame pipeline: rotate the world vertical into the camera, sweep
/// the 360 proposals, pick the best by score, gather the vertical and two
/// horizontal clusters, refine each by SVD, and reclassify.
VPResult estimate_frame(const std::vector<Segment2D>& segments, const Eigen::Vector3d& d_v_world,
                        const Pose& pose_cw, const CameraIntrinsics& k, const VPTolerances& tol);

}  // namespace axisline
