#include "axisline/factor_graph.hpp"

#include <cmath>

namespace axisline {

namespace {

constexpr double kMinDepth = 1e-8;
constexpr double kDegenerateSq = 1e-20;

double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

/// d(e)/d(l') for e = (p1~.l', p2~.l') / sqrt(l1^2 + l2^2).
Eigen::Matrix<double, 2, 3> error_wrt_image_line(const Eigen::Vector3d& l_img,
                                                 const Eigen::Vector2d& e,
                                                 const Segment2D& seg) {
  const double s_sq = l_img.x() * l_img.x() + l_img.y() * l_img.y();
  const double inv_s = 1.0 / std::sqrt(s_sq);
  const Eigen::Vector3d p1(seg.s.x(), seg.s.y(), 1.0);
  const Eigen::Vector3d p2(seg.e.x(), seg.e.y(), 1.0);
  const Eigen::RowVector3d grad_s(l_img.x() / s_sq, l_img.y() / s_sq, 0.0);
  Eigen::Matrix<double, 2, 3> d;
  d.row(0) = p1.transpose() * inv_s - e.x() * grad_s;
  d.row(1) = p2.transpose() * inv_s - e.y() * grad_s;
  return d;
}

/// Shared tail of every line residual: transform (n_w, v_w) by the observing
/// pose, project, and differentiate with respect to the observing pose and to
/// (n_w, v_w). Returns false when the projection is degenerate.
struct LineChain {
  Eigen::Vector2d e;
  Eigen::Matrix<double, 2, 6> d_obs_pose;  // [d/dw | d/dt]
  Eigen::Matrix<double, 2, 3> d_nw;
  Eigen::Matrix<double, 2, 3> d_vw;
};

bool eval_line_chain(const PluckerLine& l_w, const Pose& obs_cw, const Segment2D& seg,
                     const CameraIntrinsics& k, bool with_jacobians, LineChain& out) {
  const Eigen::Matrix3d& r = obs_cw.rotation;
  const Eigen::Vector3d& t = obs_cw.translation;
  const Eigen::Vector3d v_c = r * l_w.v;
  const Eigen::Vector3d n_c = r * l_w.n + t.cross(v_c);
  const Eigen::Matrix3d kl = k.line_projection();
  const Eigen::Vector3d l_img = kl * n_c;
  const double s_sq = l_img.x() * l_img.x() + l_img.y() * l_img.y();
  if (s_sq < kDegenerateSq) return false;

  const double inv_s = 1.0 / std::sqrt(s_sq);
  const Eigen::Vector3d p1(seg.s.x(), seg.s.y(), 1.0);
  const Eigen::Vector3d p2(seg.e.x(), seg.e.y(), 1.0);
  out.e = {p1.dot(l_img) * inv_s, p2.dot(l_img) * inv_s};

  if (!with_jacobians) return true;

  const Eigen::Matrix<double, 2, 3> a = error_wrt_image_line(l_img, out.e, seg) * kl;
  const Eigen::Matrix3d t_cross_r = skew(t) * r;
  out.d_nw = a * r;
  out.d_vw = a * t_cross_r;
  out.d_obs_pose.leftCols<3>() = a * (-r * skew(l_w.n) - t_cross_r * skew(l_w.v));
  out.d_obs_pose.rightCols<3>() = a * (-skew(v_c));
  return true;
}

}  // namespace

int LineVertex::dim() const {
  switch (stage) {
    case LineStage::InitialTempAxis:
    case LineStage::AxisAnchored: return 1;
    case LineStage::OrthoFallback: return 4;
    case LineStage::FixedDirection: return 2;
  }
  return 0;
}

PluckerLine FactorGraph::line_geometry(int line_id) const {
  const LineVertex& line = lines.at(line_id);
  switch (line.stage) {
    case LineStage::InitialTempAxis:
    case LineStage::AxisAnchored: {
      const Eigen::Vector3d dir = line.stage == LineStage::InitialTempAxis
                                      ? line.temp_axis_dir
                                      : axes.at(line.axis_ref).direction();
      return reconstruct_line(line.anchored(), dir, poses.at(line.ref_keyframe).pose_cw.inverse(),
                              intrinsics);
    }
    case LineStage::OrthoFallback: return plucker_from_ortho(line.ortho);
    case LineStage::FixedDirection: {
      const auto [b1, b2] = tangent_basis(line.fixed_dir);
      const Eigen::Vector3d q = line.plane_coords.x() * b1 + line.plane_coords.y() * b2;
      return PluckerLine{q.cross(line.fixed_dir), line.fixed_dir};
    }
  }
  throw std::logic_error("unknown line stage");
}

std::vector<std::pair<int, double>> FactorGraph::line_axis_weights(int line_id) const {
  if (association.is_unassociated(line_id)) return {};
  std::vector<std::pair<int, double>> out;
  for (const auto& [axis_id, axis] : axes) {
    const double w = association.weight(line_id, axis_id);
    if (w > 0.0) out.emplace_back(axis_id, w);
  }
  if (out.empty()) {
    // No table row: hard association to the referenced axis.
    const int ref = lines.at(line_id).axis_ref;
    if (axes.count(ref)) out.emplace_back(ref, 1.0);
  }
  return out;
}

GraphIndex GraphIndex::build(const FactorGraph& g) {
  GraphIndex idx;
  int col = 0;
  for (const auto& [id, pose] : g.poses) {
    if (pose.fixed) continue;
    idx.pose_cols[id] = {col, 6};
    col += 6;
  }
  for (const auto& [id, point] : g.points) {
    if (point.fixed) continue;
    idx.point_cols[id] = {col, 3};
    col += 3;
  }
  for (const auto& [id, line] : g.lines) {
    const int dim = line.dim();
    idx.line_cols[id] = {col, dim};
    col += dim;
    idx.line_related_cols += dim;
  }
  for (const auto& [id, axis] : g.axes) {
    idx.axis_cols[id] = {col, 2};
    col += 2;
    idx.line_related_cols += 2;
  }
  idx.total_cols = col;
  return idx;
}

void ResidualBlock::add_part(int col, int dim,
                             const Eigen::Ref<const Eigen::Matrix<double, 2, 6>>& j) {
  for (int i = 0; i < n_parts; ++i) {
    if (parts[static_cast<size_t>(i)].col == col) {
      parts[static_cast<size_t>(i)].jac.leftCols(dim) += j.leftCols(dim);
      return;
    }
  }
  auto& p = parts[static_cast<size_t>(n_parts++)];
  p.col = col;
  p.dim = dim;
  p.jac.setZero();
  p.jac.leftCols(dim) = j.leftCols(dim);
}

void for_each_residual(const FactorGraph& g, const GraphIndex& idx, bool with_jacobians,
                       const std::function<void(const ResidualBlock&)>& fn, EvalStats* stats) {
  EvalStats local;
  const double sw_point = std::sqrt(g.weights.omega_point);
  const double sw_line = std::sqrt(g.weights.omega_line);
  const double sw_axis = std::sqrt(g.weights.omega_axis);
  Eigen::Matrix<double, 2, 6> jbuf;

  // Point reprojection residuals.
  for (const auto& obs : g.point_obs) {
    const PoseVertex& pose = g.poses.at(obs.pose_id);
    const PointVertex& point = g.points.at(obs.point_id);
    const Eigen::Vector3d p_c = pose.pose_cw * point.position;
    if (p_c.z() <= kMinDepth) {
      ++local.dropped_behind_camera;
      continue;
    }
    ResidualBlock block;
    block.family = ResidualFamily::Point;
    block.r = sw_point * (g.intrinsics.project(p_c) - obs.pixel);

    if (with_jacobians) {
      const double z = p_c.z();
      Eigen::Matrix<double, 2, 3> d_pc;
      d_pc << g.intrinsics.fx / z, 0, -g.intrinsics.fx * p_c.x() / (z * z), 0,
          g.intrinsics.fy / z, -g.intrinsics.fy * p_c.y() / (z * z);
      d_pc *= sw_point;
      if (auto it = idx.pose_cols.find(obs.pose_id); it != idx.pose_cols.end()) {
        jbuf.leftCols<3>() = d_pc * (-pose.pose_cw.rotation * skew(point.position));
        jbuf.rightCols<3>() = d_pc;
        block.add_part(it->second.offset, 6, jbuf);
      }
      if (auto it = idx.point_cols.find(obs.point_id); it != idx.point_cols.end()) {
        jbuf.setZero();
        jbuf.leftCols<3>() = d_pc * pose.pose_cw.rotation;
        block.add_part(it->second.offset, 3, jbuf);
      }
    }
    fn(block);
  }

  // Segment reprojection residuals.
  for (const auto& obs : g.segment_obs) {
    const LineVertex& line = g.lines.at(obs.line_id);
    const PoseVertex& obs_pose = g.poses.at(obs.pose_id);
    const auto line_entry = idx.line_cols.find(obs.line_id);
    const auto obs_pose_entry = idx.pose_cols.find(obs.pose_id);

    switch (line.stage) {
      case LineStage::InitialTempAxis:
      case LineStage::AxisAnchored: {
        if (line.inv_depth <= kMinDepth) {
          ++local.dropped_behind_camera;
          continue;
        }
        const Pose& ref_cw = g.poses.at(line.ref_keyframe).pose_cw;
        const Pose ref_wc = ref_cw.inverse();
        const Eigen::Vector3d p_cam = g.intrinsics.backproject(line.anchor_pixel) / line.inv_depth;
        const Eigen::Vector3d p_w = ref_wc * p_cam;

        std::vector<std::pair<int, double>> hypotheses;
        if (line.stage == LineStage::InitialTempAxis) {
          hypotheses.emplace_back(-1, 1.0);
        } else {
          hypotheses = g.line_axis_weights(obs.line_id);
        }

        for (const auto& [axis_id, w] : hypotheses) {
          const Eigen::Vector3d v = axis_id < 0 ? line.temp_axis_dir
                                                : g.axes.at(axis_id).direction();
          const PluckerLine l_w{p_w.cross(v), v};
          LineChain chain;
          if (!eval_line_chain(l_w, obs_pose.pose_cw, obs.segment, g.intrinsics, with_jacobians,
                               chain)) {
            ++local.dropped_degenerate;
            continue;
          }
          const double scale = std::sqrt(w) * sw_line;
          ResidualBlock block;
          block.family = ResidualFamily::StructuralLine;
          block.r = scale * chain.e;

          if (with_jacobians) {
            if (obs_pose_entry != idx.pose_cols.end()) {
              block.add_part(obs_pose_entry->second.offset, 6, scale * chain.d_obs_pose);
            }
            const Eigen::Matrix<double, 2, 3> d_pw = chain.d_nw * (-skew(v));
            if (auto it = idx.pose_cols.find(line.ref_keyframe); it != idx.pose_cols.end()) {
              jbuf.leftCols<3>() = d_pw * skew(p_w);
              jbuf.rightCols<3>() = -d_pw * ref_wc.rotation;
              block.add_part(it->second.offset, 6, scale * jbuf);
            }
            if (line_entry != idx.line_cols.end()) {
              jbuf.setZero();
              jbuf.col(0) = d_pw * (ref_wc.rotation * (-p_cam / line.inv_depth));
              block.add_part(line_entry->second.offset, 1, scale * jbuf);
            }
            if (axis_id >= 0) {
              if (auto it = idx.axis_cols.find(axis_id); it != idx.axis_cols.end()) {
                const auto [b1, b2] = tangent_basis(v);
                const Eigen::Matrix<double, 2, 3> d_v = chain.d_nw * skew(p_w) + chain.d_vw;
                jbuf.setZero();
                jbuf.col(0) = d_v * b1;
                jbuf.col(1) = d_v * b2;
                block.add_part(it->second.offset, 2, scale * jbuf);
              }
            }
          }
          fn(block);
        }
        break;
      }
      case LineStage::OrthoFallback: {
        const PluckerLine l_w = plucker_from_ortho(line.ortho);
        LineChain chain;
        if (!eval_line_chain(l_w, obs_pose.pose_cw, obs.segment, g.intrinsics, with_jacobians,
                             chain)) {
          ++local.dropped_degenerate;
          continue;
        }
        ResidualBlock block;
        block.family = ResidualFamily::OrthoLine;
        block.r = sw_line * chain.e;

        if (with_jacobians) {
          if (obs_pose_entry != idx.pose_cols.end()) {
            block.add_part(obs_pose_entry->second.offset, 6, sw_line * chain.d_obs_pose);
          }
          if (line_entry != idx.line_cols.end()) {
            const Eigen::Matrix3d u = line.ortho.rotation();
            const double cp = std::cos(line.ortho.phi);
            const double sp = std::sin(line.ortho.phi);
            jbuf.setZero();
            jbuf.leftCols<3>() =
                chain.d_nw * (-cp * u * skew(Eigen::Vector3d::UnitX())) +
                chain.d_vw * (-sp * u * skew(Eigen::Vector3d::UnitY()));
            jbuf.col(3) = chain.d_nw * (-sp * u.col(0)) + chain.d_vw * (cp * u.col(1));
            block.add_part(line_entry->second.offset, 4, sw_line * jbuf);
          }
        }
        fn(block);
        break;
      }
      case LineStage::FixedDirection: {
        const auto [b1, b2] = tangent_basis(line.fixed_dir);
        const Eigen::Vector3d q = line.plane_coords.x() * b1 + line.plane_coords.y() * b2;
        const PluckerLine l_w{q.cross(line.fixed_dir), line.fixed_dir};
        LineChain chain;
        if (!eval_line_chain(l_w, obs_pose.pose_cw, obs.segment, g.intrinsics, with_jacobians,
                             chain)) {
          ++local.dropped_degenerate;
          continue;
        }
        ResidualBlock block;
        block.family = ResidualFamily::OrthoLine;
        block.r = sw_line * chain.e;

        if (with_jacobians) {
          if (obs_pose_entry != idx.pose_cols.end()) {
            block.add_part(obs_pose_entry->second.offset, 6, sw_line * chain.d_obs_pose);
          }
          if (line_entry != idx.line_cols.end()) {
            jbuf.setZero();
            jbuf.col(0) = chain.d_nw * b1.cross(line.fixed_dir);
            jbuf.col(1) = chain.d_nw * b2.cross(line.fixed_dir);
            block.add_part(line_entry->second.offset, 2, sw_line * jbuf);
          }
        }
        fn(block);
        break;
      }
    }
  }

  // Axis priors.
  for (const auto& [axis_id, axis] : g.axes) {
    ResidualBlock block;
    block.family = ResidualFamily::Axis;
    block.robust = false;
    block.r = sw_axis * residual_axis(axis);

    if (with_jacobians) {
      if (auto it = idx.axis_cols.find(axis_id); it != idx.axis_cols.end()) {
        const Eigen::Vector3d v = axis.direction();
        const auto [b1, b2] = tangent_basis(v);
        const double sin_phi = std::sin(axis.dir.phi);
        const double rho_sq = v.x() * v.x() + v.y() * v.y();
        jbuf.setZero();
        if (sin_phi > 1e-8 && rho_sq > 1e-16) {
          const Eigen::RowVector3d d_phi(0, 0, -1.0 / sin_phi);
          const Eigen::RowVector3d d_theta(v.y() / rho_sq, -v.x() / rho_sq, 0);
          jbuf(0, 0) = d_phi * b1;
          jbuf(0, 1) = d_phi * b2;
          jbuf(1, 0) = d_theta * b1;
          jbuf(1, 1) = d_theta * b2;
        }
        block.add_part(it->second.offset, 2, sw_axis * jbuf);
      }
    }
    fn(block);
  }

  if (stats) *stats = local;
}

Linearization linearize(const FactorGraph& g, const RobustKernel& kernel) {
  const GraphIndex idx = GraphIndex::build(g);
  Linearization lin;
  std::vector<ResidualBlock> blocks;
  for_each_residual(g, idx, true, [&](const ResidualBlock& b) { blocks.push_back(b); },
                    &lin.stats);

  lin.residuals.resize(2 * static_cast<Eigen::Index>(blocks.size()));
  lin.jacobian = Eigen::MatrixXd::Zero(2 * static_cast<Eigen::Index>(blocks.size()),
                                       idx.total_cols);
  Eigen::Index row = 0;
  double cost = 0.0;
  for (const auto& b : blocks) {
    const double s_sq = b.r.squaredNorm();
    double scale = 1.0;
    if (b.robust) {
      cost += kernel.cost(s_sq);
      scale = kernel.sqrt_weight(std::sqrt(s_sq));
    } else {
      cost += s_sq;
    }
    lin.residuals.segment<2>(row) = scale * b.r;
    for (int i = 0; i < b.n_parts; ++i) {
      const auto& p = b.parts[static_cast<size_t>(i)];
      lin.jacobian.block(row, p.col, 2, p.dim) += scale * p.jac.leftCols(p.dim);
    }
    row += 2;
  }
  lin.cost = cost;
  return lin;
}

double evaluate_cost(const FactorGraph& g, const RobustKernel& kernel, EvalStats* stats) {
  const GraphIndex idx = GraphIndex::build(g);
  double cost = 0.0;
  for_each_residual(
      g, idx, false,
      [&](const ResidualBlock& b) {
        const double s_sq = b.r.squaredNorm();
        cost += b.robust ? kernel.cost(s_sq) : s_sq;
      },
      stats);
  return cost;
}

void apply_increment(FactorGraph& g, const GraphIndex& idx, const Eigen::VectorXd& delta) {
  if (delta.size() != idx.total_cols) {
    throw std::invalid_argument("invalid-graph: increment size mismatch");
  }
  for (const auto& [id, entry] : idx.pose_cols) {
    PoseVertex& pose = g.poses.at(id);
    pose.pose_cw.rotation = pose.pose_cw.rotation * rotation_exp(delta.segment<3>(entry.offset));
    pose.pose_cw.translation += delta.segment<3>(entry.offset + 3);
  }
  for (const auto& [id, entry] : idx.point_cols) {
    g.points.at(id).position += delta.segment<3>(entry.offset);
  }
  for (const auto& [id, entry] : idx.line_cols) {
    LineVertex& line = g.lines.at(id);
    switch (line.stage) {
      case LineStage::InitialTempAxis:
      case LineStage::AxisAnchored:
        line.inv_depth += delta(entry.offset);
        break;
      case LineStage::OrthoFallback: {
        const Eigen::Matrix3d u =
            line.ortho.rotation() * rotation_exp(delta.segment<3>(entry.offset));
        line.ortho.psi = rotation_log(u);
        line.ortho.phi += delta(entry.offset + 3);
        break;
      }
      case LineStage::FixedDirection:
        line.plane_coords += delta.segment<2>(entry.offset);
        break;
    }
  }
  for (const auto& [id, entry] : idx.axis_cols) {
    PrincipalAxis& axis = g.axes.at(id);
    const Eigen::Vector3d v =
        sphere_retract(axis.direction(), delta(entry.offset), delta(entry.offset + 1));
    axis.dir = latlong_from_direction(v);
  }
}

Eigen::Vector2d residual_point(const Pose& pose_cw, const Eigen::Vector3d& point,
                               const Eigen::Vector2d& obs, const CameraIntrinsics& k) {
  const Eigen::Vector3d p_c = pose_cw * point;
  if (p_c.z() <= kMinDepth) {
    throw std::domain_error("invalid-depth: point behind camera");
  }
  return k.project(p_c) - obs;
}

Eigen::Vector2d residual_structural_line(const AnchoredLine& line, const Eigen::Vector3d& axis_dir,
                                         const Pose& ref_pose_cw, const Pose& obs_pose_cw,
                                         const Segment2D& obs, const CameraIntrinsics& k) {
  const PluckerLine l_w = reconstruct_line(line, axis_dir, ref_pose_cw.inverse(), k);
  const PluckerLine l_c = transform_line(l_w, obs_pose_cw);
  return line_reprojection_error(project_line(l_c, k), obs);
}

Eigen::Vector2d residual_ortho_line(const OrthoLine& line, const Pose& obs_pose_cw,
                                    const Segment2D& obs, const CameraIntrinsics& k) {
  const PluckerLine l_c = transform_line(plucker_from_ortho(line), obs_pose_cw);
  return line_reprojection_error(project_line(l_c, k), obs);
}

Eigen::Vector2d residual_axis(const PrincipalAxis& axis) {
  const AxisDirection prior = latlong_from_direction(axis.prior_dir);
  return {axis.dir.phi - prior.phi, wrap_angle(axis.dir.theta - prior.theta)};
}

}  // namespace axisline
