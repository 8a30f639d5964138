#pragma once

#include "axisline/axes.hpp"
#include "axisline/geometry.hpp"

#include <array>
#include <functional>
#include <limits>
#include <map>
#include <vector>

namespace axisline {

/// Line optimization stages. InitialTempAxis, OrthoFallback and AxisAnchored
/// are the pipeline stages; FixedDirection is the two-parameter baseline used
/// by the synthetic benchmark (a constant direction with two positional
/// coordinates), never produced by the stage policy.
enum class LineStage { InitialTempAxis, OrthoFallback, AxisAnchored, FixedDirection };

struct PoseVertex {
  Pose pose_cw;  // world -> camera
  bool fixed = false;
};

struct PointVertex {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  bool fixed = false;
};

struct LineVertex {
  LineStage stage = LineStage::InitialTempAxis;

  // Anchored state (InitialTempAxis / AxisAnchored). The anchor pixel is the
  // observed segment midpoint in the reference keyframe and is never
  // optimized; inv_depth is the single free scalar.
  Eigen::Vector2d anchor_pixel = Eigen::Vector2d::Zero();
  int ref_keyframe = -1;
  double inv_depth = 1.0;
  int axis_ref = -1;                                       // AxisAnchored
  Eigen::Vector3d temp_axis_dir = Eigen::Vector3d::UnitZ(); // InitialTempAxis, world, constant

  // Orthonormal state (OrthoFallback), 4 free scalars.
  OrthoLine ortho;

  // Fixed-direction baseline state (FixedDirection): q = a*b1 + b*b2 in the
  // plane orthogonal to fixed_dir, 2 free scalars.
  Eigen::Vector3d fixed_dir = Eigen::Vector3d::UnitZ();
  Eigen::Vector2d plane_coords = Eigen::Vector2d::Zero();

  bool optimized_once = false;

  AnchoredLine anchored() const {
    return AnchoredLine{anchor_pixel, ref_keyframe, inv_depth, axis_ref};
  }
  int dim() const;
};

struct PointObs {
  int pose_id = -1;
  int point_id = -1;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
};

struct SegmentObs {
  int pose_id = -1;
  int line_id = -1;
  Segment2D segment;
};

/// Scalar information weights per residual family (Omega = omega * I).
/// omega_axis is in rad^-2; the default corresponds to a 5 degree sigma.
struct ResidualWeights {
  double omega_point = 1.0;
  double omega_line = 1.0;
  double omega_axis = 1.0 / std::pow(5.0 * M_PI / 180.0, 2);
};

/// The joint problem state: poses, points, lines, axes, observations and the
/// soft line-axis association. An AxisAnchored line with explicit rows in the
/// association table contributes one weighted residual per axis with w > 0; a
/// line flagged unassociated contributes nothing; a line with no table entry
/// at all falls back to a hard unit weight on its axis_ref.
struct FactorGraph {
  CameraIntrinsics intrinsics;
  std::map<int, PoseVertex> poses;
  std::map<int, PointVertex> points;
  std::map<int, LineVertex> lines;
  std::map<int, PrincipalAxis> axes;
  std::vector<PointObs> point_obs;
  std::vector<SegmentObs> segment_obs;
  AssociationTable association;
  ResidualWeights weights;

  /// Current world Plucker line of a vertex under its active representation.
  PluckerLine line_geometry(int line_id) const;
  /// Optimization weights of an AxisAnchored line: (axis id, w) pairs.
  std::vector<std::pair<int, double>> line_axis_weights(int line_id) const;
};

/// Column layout of the free parameters: poses (6), points (3), lines
/// (1/4/2 by stage), axes (2), in id order within each group.
struct GraphIndex {
  struct Entry {
    int offset = -1;
    int dim = 0;
  };
  std::map<int, Entry> pose_cols, point_cols, line_cols, axis_cols;
  int total_cols = 0;
  int line_related_cols = 0;  // line columns plus axis columns

  static GraphIndex build(const FactorGraph& g);
};

enum class ResidualFamily { Point, StructuralLine, OrthoLine, Axis };

struct JacobianPart {
  int col = -1;
  int dim = 0;
  Eigen::Matrix<double, 2, 6> jac = Eigen::Matrix<double, 2, 6>::Zero();
};

/// One 2-dimensional residual with its sqrt-information scaling already
/// applied (association weight and family Omega folded into r and jac).
struct ResidualBlock {
  ResidualFamily family = ResidualFamily::Point;
  Eigen::Vector2d r = Eigen::Vector2d::Zero();
  std::array<JacobianPart, 4> parts;
  int n_parts = 0;
  bool robust = true;  // pixel families only; the axis prior is never robustified

  void add_part(int col, int dim, const Eigen::Ref<const Eigen::Matrix<double, 2, 6>>& j);
};

struct EvalStats {
  int dropped_behind_camera = 0;
  int dropped_degenerate = 0;
  int total() const { return dropped_behind_camera + dropped_degenerate; }
};

/// Visits every residual block in deterministic order (point observations,
/// then segment observations, then axis priors). Observations that cannot be
/// evaluated (behind camera, degenerate projection) are skipped and counted.
void for_each_residual(const FactorGraph& g, const GraphIndex& idx, bool with_jacobians,
                       const std::function<void(const ResidualBlock&)>& fn,
                       EvalStats* stats = nullptr);

struct RobustKernel {
  double width = std::numeric_limits<double>::infinity();  // Huber, pixels

  double cost(double s_sq) const {
    if (!(width < std::numeric_limits<double>::infinity())) return s_sq;
    const double s = std::sqrt(s_sq);
    return s <= width ? s_sq : 2.0 * width * s - width * width;
  }
  double sqrt_weight(double s) const {
    if (!(width < std::numeric_limits<double>::infinity()) || s <= width) return 1.0;
    return std::sqrt(width / s);
  }
};

struct Linearization {
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
  double cost = 0.0;
  EvalStats stats;
};

/// Dense stacked residual/Jacobian of the whole graph with the robust kernel
/// (IRLS scaling) applied; cost is the exact robustified total.
Linearization linearize(const FactorGraph& g, const RobustKernel& kernel = {});

double evaluate_cost(const FactorGraph& g, const RobustKernel& kernel = {},
                     EvalStats* stats = nullptr);

/// Retraction of a packed increment onto the graph state: poses by
/// R*exp([dw]x) and additive translation, points additively, anchored lines
/// additively in inverse depth, ortho lines by U*exp([dpsi]x) and additive
/// phi, fixed-direction lines additively in plane coordinates, axes by the
/// sphere exponential map at the current direction.
void apply_increment(FactorGraph& g, const GraphIndex& idx, const Eigen::VectorXd& delta);

// Standalone residuals matching the graph evaluation exactly (no weights).

/// Pinhole reprojection difference (projected - observed). Throws
/// std::domain_error ("invalid-depth") when the point is behind the camera.
Eigen::Vector2d residual_point(const Pose& pose_cw, const Eigen::Vector3d& point,
                               const Eigen::Vector2d& obs, const CameraIntrinsics& k);

/// Anchored-line reprojection residual: Eq-2 reconstruction in the reference
/// keyframe, transform into the observing frame, projection, endpoint
/// distances.
Eigen::Vector2d residual_structural_line(const AnchoredLine& line, const Eigen::Vector3d& axis_dir,
                                         const Pose& ref_pose_cw, const Pose& obs_pose_cw,
                                         const Segment2D& obs, const CameraIntrinsics& k);

Eigen::Vector2d residual_ortho_line(const OrthoLine& line, const Pose& obs_pose_cw,
                                    const Segment2D& obs, const CameraIntrinsics& k);

/// Axis prior on the latitude/longitude chart: (phi - phi_prior,
/// wrap(theta - theta_prior)) with the wrap mapping to (-pi, pi].
Eigen::Vector2d residual_axis(const PrincipalAxis& axis);

}  // namespace axisline
