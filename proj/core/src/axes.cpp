#include "axisline/axes.hpp"

#include <algorithm>
#include <cmath>

namespace axisline {

namespace {

double deg(double rad) { return rad * 180.0 / M_PI; }

/// Flip d into the hemisphere of ref (projective identification).
Eigen::Vector3d hemisphere(const Eigen::Vector3d& d, const Eigen::Vector3d& ref) {
  return d.dot(ref) < 0.0 ? Eigen::Vector3d(-d) : d;
}

/// Canonical sign for a projective direction: first component with
/// |x| > 1e-12 made positive.
Eigen::Vector3d canonical_sign(const Eigen::Vector3d& d) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) > 1e-12) return d[i] < 0.0 ? Eigen::Vector3d(-d) : d;
  }
  return d;
}

Eigen::Vector3d mean_shift_once(const Eigen::Vector3d& d, const std::vector<Eigen::Vector3d>& dirs,
                                const MeanShiftConfig& cfg) {
  const double bandwidth_rad = cfg.bandwidth_deg * M_PI / 180.0;
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  double total = 0.0;
  for (const auto& di : dirs) {
    const double ang = projective_angle(di, d);
    if (ang > bandwidth_rad) continue;
    const double a_deg = deg(ang);
    const double w = std::exp(-cfg.kernel_c * a_deg * a_deg);
    acc += w * hemisphere(di, d);
    total += w;
  }
  if (total <= 0.0 || acc.norm() < 1e-12) return d;
  return acc.normalized();
}

}  // namespace

std::vector<Eigen::Vector3d> mean_shift_directions(const std::vector<Eigen::Vector3d>& dirs,
                                                   const MeanShiftConfig& cfg) {
  if (dirs.empty()) {
    throw std::invalid_argument("no-candidates: empty direction set");
  }
  const double convergence_rad = cfg.convergence_deg * M_PI / 180.0;
  const double merge_rad = kAxisMergeAngleDeg * M_PI / 180.0;

  std::vector<Eigen::Vector3d> modes;
  for (const auto& seed : dirs) {
    Eigen::Vector3d d = seed.normalized();
    for (int it = 0; it < cfg.max_iters; ++it) {
      const Eigen::Vector3d m = mean_shift_once(d, dirs, cfg);
      const double shift = projective_angle(m, d);
      d = m;
      if (shift < convergence_rad) break;
    }
    d = canonical_sign(d);
    const bool duplicate = std::any_of(modes.begin(), modes.end(), [&](const Eigen::Vector3d& m) {
      return projective_angle(m, d) < merge_rad;
    });
    if (!duplicate) modes.push_back(d);
  }
  return modes;
}

std::vector<PrincipalAxis> propose_axes(
    const std::vector<std::pair<int, Eigen::Vector3d>>& unclassified,
    const std::vector<PrincipalAxis>& existing, double local_ratio, const AxisPolicy& policy,
    const MeanShiftConfig& cfg) {
  if (static_cast<int>(unclassified.size()) < policy.creation_threshold) return {};
  if (local_ratio <= policy.unstructured_ratio) return {};

  std::vector<Eigen::Vector3d> dirs;
  dirs.reserve(unclassified.size());
  for (const auto& [id, d] : unclassified) dirs.push_back(d.normalized());

  const double merge_rad = policy.merge_angle_deg * M_PI / 180.0;
  const double bandwidth_rad = cfg.bandwidth_deg * M_PI / 180.0;

  struct Candidate {
    Eigen::Vector3d dir;
    double mean_angle = 0.0;
    int support = 0;
  };
  std::vector<Candidate> candidates;
  for (const auto& mode : mean_shift_directions(dirs, cfg)) {
    const bool near_existing =
        std::any_of(existing.begin(), existing.end(), [&](const PrincipalAxis& a) {
          return projective_angle(a.direction(), mode) < merge_rad;
        });
    if (near_existing) continue;

    Candidate c{mode, 0.0, 0};
    for (const auto& d : dirs) {
      const double ang = projective_angle(d, mode);
      if (ang <= bandwidth_rad) {
        c.mean_angle += ang;
        ++c.support;
      }
    }
    if (c.support == 0) continue;
    c.mean_angle /= c.support;
    candidates.push_back(c);
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.mean_angle != b.mean_angle) return a.mean_angle < b.mean_angle;
    return a.support > b.support;
  });

  int next_id = 0;
  for (const auto& a : existing) next_id = std::max(next_id, a.id + 1);

  std::vector<PrincipalAxis> out;
  for (const auto& c : candidates) {
    PrincipalAxis axis;
    axis.id = next_id++;
    axis.dir = latlong_from_direction(c.dir);
    axis.prior_dir = c.dir;
    out.push_back(std::move(axis));
  }
  return out;
}

AssociationTable associate(const std::vector<LineAxisAngles>& lines,
                           const std::vector<PrincipalAxis>& axes, const AxisPolicy& policy) {
  AssociationTable table;
  const double inv_two_sigma_sq = 1.0 / (2.0 * policy.assoc_sigma_deg * policy.assoc_sigma_deg);
  for (const auto& line : lines) {
    std::vector<std::pair<int, double>> scores;
    double total = 0.0;
    for (size_t j = 0; j < axes.size() && j < line.angle_deg.size(); ++j) {
      const double ang = line.angle_deg[j];
      if (ang > policy.gate_angle_deg) continue;  // gated: exactly zero
      const double s = std::exp(-ang * ang * inv_two_sigma_sq);
      scores.emplace_back(axes[j].id, s);
      total += s;
    }
    if (scores.empty() || total <= 0.0) {
      table.unassociated.insert(line.line_id);
      continue;
    }
    for (const auto& [axis_id, s] : scores) {
      table.weights[{line.line_id, axis_id}] = s / total;
    }
  }
  return table;
}

AxisUpdateResult update_axes(const std::vector<PrincipalAxis>& axes,
                             const std::map<int, AxisDirection>& post_ba_dirs,
                             const AxisPolicy& policy) {
  const double update_rad = policy.update_angle_deg * M_PI / 180.0;
  const double merge_rad = policy.merge_angle_deg * M_PI / 180.0;

  AxisUpdateResult result;
  for (const auto& axis : axes) {
    const auto it = post_ba_dirs.find(axis.id);
    if (it == post_ba_dirs.end()) {
      throw std::runtime_error("inconsistent-graph: missing post-BA direction for axis " +
                               std::to_string(axis.id));
    }
    PrincipalAxis updated = axis;
    const Eigen::Vector3d post_dir = direction_from_latlong(it->second);
    if (projective_angle(axis.prior_dir, post_dir) > update_rad) {
      updated.dir = it->second;
      updated.prior_dir = post_dir;
      ++updated.change_count;
    }
    // Below the threshold the pre-BA direction is kept as-is.
    result.axes.push_back(std::move(updated));
  }

  auto erase_axis = [&](size_t idx) {
    const PrincipalAxis& victim = result.axes[idx];
    result.deleted_ids.push_back(victim.id);
    for (const auto& [line_id, w] : victim.member_lines) {
      result.orphaned_lines.push_back(line_id);
    }
    result.axes.erase(result.axes.begin() + static_cast<std::ptrdiff_t>(idx));
  };

  for (size_t i = result.axes.size(); i-- > 0;) {
    if (result.axes[i].change_count > policy.max_changes) erase_axis(i);
  }

  // Merge pass: the later-detected (larger id) of any adjacent pair goes.
  bool merged = true;
  while (merged) {
    merged = false;
    for (size_t i = 0; i < result.axes.size() && !merged; ++i) {
      for (size_t j = i + 1; j < result.axes.size() && !merged; ++j) {
        if (projective_angle(result.axes[i].direction(), result.axes[j].direction()) < merge_rad) {
          erase_axis(result.axes[i].id > result.axes[j].id ? i : j);
          merged = true;
        }
      }
    }
  }

  std::sort(result.deleted_ids.begin(), result.deleted_ids.end());
  std::sort(result.orphaned_lines.begin(), result.orphaned_lines.end());
  return result;
}

}  // namespace axisline
