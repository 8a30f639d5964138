#include "axisline/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace axisline {

std::optional<double> anchor_ray_inv_depth(const PluckerLine& l_w,
                                           const Eigen::Vector2d& anchor_pixel,
                                           const Pose& ref_pose_cw, const CameraIntrinsics& k) {
  const Pose ref_wc = ref_pose_cw.inverse();
  const Eigen::Vector3d origin = ref_wc.translation;                // camera center
  const Eigen::Vector3d u = ref_wc.rotation * k.backproject(anchor_pixel);
  const Eigen::Vector3d q0 = l_w.closest_point_to_origin();
  const Eigen::Vector3d& v = l_w.v;

  // Closest points of ray origin + z*u and line q0 + s*v; z is the depth of
  // the anchor in the reference camera because |u| carries the K^-1 scale.
  const double a = u.dot(u);
  const double b = u.dot(v);
  const double c = v.dot(v);
  const Eigen::Vector3d w0 = origin - q0;
  const double d = u.dot(w0);
  const double e = v.dot(w0);
  const double denom = a * c - b * b;
  if (std::abs(denom) < 1e-12 * a * c) return std::nullopt;  // parallel
  const double z = (b * e - c * d) / denom;
  if (z <= 1e-9) return std::nullopt;  // behind the reference camera
  return 1.0 / z;
}

namespace {

bool has_association(const FactorGraph& g, int line_id) {
  if (g.association.is_unassociated(line_id)) return false;
  for (const auto& [axis_id, axis] : g.axes) {
    if (g.association.weight(line_id, axis_id) > 0.0) return true;
  }
  return false;
}

int strongest_axis(const FactorGraph& g, int line_id) {
  int best = -1;
  double best_w = 0.0;
  for (const auto& [axis_id, axis] : g.axes) {
    const double w = g.association.weight(line_id, axis_id);
    if (w > best_w) {
      best_w = w;
      best = axis_id;
    }
  }
  return best;
}

}  // namespace

std::vector<StageTransition> stage_policy(FactorGraph& g) {
  std::vector<StageTransition> transitions;
  for (auto& [line_id, line] : g.lines) {
    const LineStage from = line.stage;
    switch (line.stage) {
      case LineStage::InitialTempAxis: {
        if (!line.optimized_once) break;
        if (has_association(g, line_id)) {
          line.axis_ref = strongest_axis(g, line_id);
          line.stage = LineStage::AxisAnchored;
        } else {
          // Drop to the orthonormal representation, keeping the current
          // geometry.
          const PluckerLine l_w = reconstruct_line(
              line.anchored(), line.temp_axis_dir,
              g.poses.at(line.ref_keyframe).pose_cw.inverse(), g.intrinsics);
          line.ortho = ortho_from_plucker(l_w);
          line.stage = LineStage::OrthoFallback;
        }
        break;
      }
      case LineStage::OrthoFallback: {
        if (!has_association(g, line_id)) break;
        const PluckerLine l_w = plucker_from_ortho(line.ortho);
        const auto r = anchor_ray_inv_depth(l_w, line.anchor_pixel,
                                            g.poses.at(line.ref_keyframe).pose_cw, g.intrinsics);
        if (!r) break;  // parallel to the anchor ray: stay in ortho form
        line.inv_depth = *r;
        line.axis_ref = strongest_axis(g, line_id);
        line.stage = LineStage::AxisAnchored;
        break;
      }
      case LineStage::AxisAnchored:
      case LineStage::FixedDirection: break;
    }
    if (line.stage != from) transitions.push_back({line_id, from, line.stage});
  }
  return transitions;
}

namespace {

Eigen::Vector3d current_direction(const FactorGraph& g, int line_id) {
  return g.line_geometry(line_id).v.normalized();
}

/// Demote a line to the orthonormal representation at its current geometry.
void demote_to_ortho(FactorGraph& g, int line_id) {
  LineVertex& line = g.lines.at(line_id);
  const PluckerLine l_w = g.line_geometry(line_id);
  line.ortho = ortho_from_plucker(l_w);
  line.stage = LineStage::OrthoFallback;
  line.axis_ref = -1;
}

}  // namespace

EMReport run_association_rounds(FactorGraph& g, const EMConfig& cfg) {
  EMReport report;
  for (int round = 0; round < cfg.rounds; ++round) {
    EMRoundReport rr;

    // Axis creation from unassociated non-structural lines.
    std::vector<std::pair<int, Eigen::Vector3d>> unclassified;
    int structural = 0;
    for (const auto& [line_id, line] : g.lines) {
      if (line.stage == LineStage::AxisAnchored) {
        ++structural;
      } else if (line.stage != LineStage::FixedDirection) {
        unclassified.emplace_back(line_id, current_direction(g, line_id));
      }
    }
    const double ratio = structural == 0
                             ? std::numeric_limits<double>::infinity()
                             : static_cast<double>(unclassified.size()) / structural;
    for (auto& axis : propose_axes(unclassified, [&] {
           std::vector<PrincipalAxis> existing;
           for (const auto& [id, a] : g.axes) existing.push_back(a);
           return existing;
         }(), ratio, cfg.axis_policy, cfg.mean_shift)) {
      ++rr.new_axes;
      g.axes.emplace(axis.id, std::move(axis));
    }

    // E-step: association weights from the mean vanishing-point angle, which
    // for this graph is the angle between the line's current direction and
    // each axis (identical in every observing frame).
    std::vector<PrincipalAxis> axis_list;
    for (const auto& [id, a] : g.axes) axis_list.push_back(a);
    std::vector<LineAxisAngles> angles;
    for (const auto& [line_id, line] : g.lines) {
      if (line.stage == LineStage::FixedDirection) continue;
      LineAxisAngles la;
      la.line_id = line_id;
      const Eigen::Vector3d dir = current_direction(g, line_id);
      for (const auto& axis : axis_list) {
        la.angle_deg.push_back(projective_angle(dir, axis.direction()) * 180.0 / M_PI);
      }
      angles.push_back(std::move(la));
    }
    g.association = associate(angles, axis_list, cfg.axis_policy);
    for (auto& [id, axis] : g.axes) {
      axis.member_lines.clear();
      for (const auto& la : angles) {
        const double w = g.association.weight(la.line_id, id);
        if (w > 0.0) axis.member_lines[la.line_id] = w;
      }
    }

    rr.transitions = stage_policy(g);

    // M-step.
    const std::vector<PrincipalAxis> pre_ba = axis_list;
    rr.opt = solve(g, cfg.lm);
    for (auto& [line_id, line] : g.lines) line.optimized_once = true;

    // Lifecycle pass on the optimized directions.
    std::map<int, AxisDirection> post_ba;
    std::vector<PrincipalAxis> pre_ba_current;
    for (const auto& axis : pre_ba) {
      if (!g.axes.count(axis.id)) continue;
      post_ba[axis.id] = g.axes.at(axis.id).dir;
      PrincipalAxis pre = axis;
      pre.member_lines = g.axes.at(axis.id).member_lines;
      pre_ba_current.push_back(std::move(pre));
    }
    const AxisUpdateResult update = update_axes(pre_ba_current, post_ba, cfg.axis_policy);
    // Orphans must leave the anchored representation while their axis still
    // exists, since the conversion reads its direction.
    for (const int line_id : update.orphaned_lines) {
      if (g.lines.count(line_id) && g.lines.at(line_id).stage == LineStage::AxisAnchored) {
        demote_to_ortho(g, line_id);
      }
      g.association.unassociated.insert(line_id);
    }
    for (const int victim : update.deleted_ids) g.axes.erase(victim);
    for (const auto& axis : update.axes) g.axes.at(axis.id) = axis;
    rr.deleted_axes = update.deleted_ids;

    report.rounds.push_back(std::move(rr));
  }
  return report;
}

}  // namespace axisline
