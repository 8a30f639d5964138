#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <utility>

namespace axisline {

/// Skew-symmetric matrix [v]x such that [v]x * w == v.cross(w).
Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// Exponential map so(3) -> SO(3) (rotation vector to matrix).
Eigen::Matrix3d rotation_exp(const Eigen::Vector3d& w);

/// Logarithm map SO(3) -> so(3). Angle returned in [0, pi].
Eigen::Vector3d rotation_log(const Eigen::Matrix3d& R);

/// Unsigned angle between two vectors, radians in [0, pi].
double angle_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

/// Angle between two directions on the projective sphere, radians in [0, pi/2].
/// A direction and its negation are identified.
double projective_angle(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

/// Deterministic orthonormal basis (b1, b2) of the plane orthogonal to unit v;
/// (b1, b2, v) is right-handed.
std::pair<Eigen::Vector3d, Eigen::Vector3d> tangent_basis(const Eigen::Vector3d& v);

/// Geodesic retraction on the unit sphere: moves unit vector v by the tangent
/// step d1*b1 + d2*b2 where (b1, b2) = tangent_basis(v). Exact exponential map,
/// derivative at zero is (b1, b2).
Eigen::Vector3d sphere_retract(const Eigen::Vector3d& v, double d1, double d2);

/// Rigid transform. Frame semantics are carried by names at call sites:
/// a pose_cw maps world coordinates to camera coordinates.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }
  static Pose from_rotvec(const Eigen::Vector3d& w, const Eigen::Vector3d& t);

  Pose inverse() const;
  Pose operator*(const Pose& other) const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const;

  /// True when ||R^T R - I|| < tol and det(R) > 0.
  bool is_orthonormal(double tol = 1e-9) const;
};

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  Eigen::Matrix3d matrix() const;

  /// K^-1 * (u, v, 1): viewing ray direction at unit depth.
  Eigen::Vector3d backproject(const Eigen::Vector2d& pixel) const;

  /// Pinhole projection of a camera-frame point with z > 0.
  Eigen::Vector2d project(const Eigen::Vector3d& p_cam) const;

  /// Line projection matrix K_L = fx*fy * K^-T mapping the Plucker normal of a
  /// camera-frame line to the homogeneous image line.
  Eigen::Matrix3d line_projection() const;
};

/// Plucker coordinates (n, v): n is the moment (normal of the plane through
/// the line and the origin), v the direction. Stored unnormalized; the pair is
/// projective, so any positive or negative common scale is the same line.
struct PluckerLine {
  Eigen::Vector3d n = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();

  /// Point on the line closest to the origin.
  Eigen::Vector3d closest_point_to_origin() const { return v.cross(n) / v.squaredNorm(); }
};

/// Minimal 4-parameter line representation (U, W) in SO(3) x SO(2).
/// psi is the rotation vector of U; phi the SO(2) angle encoding the
/// normal/direction magnitude ratio (distance of the line from the origin).
struct OrthoLine {
  Eigen::Vector3d psi = Eigen::Vector3d::Zero();
  double phi = 0.0;

  Eigen::Matrix3d rotation() const { return rotation_exp(psi); }
};

/// Shared axis direction as latitude/longitude, phi in [0, pi], theta in [0, 2*pi).
struct AxisDirection {
  double phi = 0.0;
  double theta = 0.0;
};

/// Three-parameter structural line: a fixed pixel anchor in its reference
/// keyframe plus the inverse depth r of that anchor; the direction comes from
/// the referenced principal axis and is not part of this struct.
struct AnchoredLine {
  Eigen::Vector2d anchor_pixel = Eigen::Vector2d::Zero();
  int ref_keyframe = -1;
  double inv_depth = 0.0;
  int axis_ref = -1;
};

struct Segment2D {
  Eigen::Vector2d s = Eigen::Vector2d::Zero();
  Eigen::Vector2d e = Eigen::Vector2d::Zero();

  Eigen::Vector2d midpoint() const { return 0.5 * (s + e); }
  Eigen::Vector2d direction() const { return e - s; }

  /// Homogeneous infinite line through the segment, s~ x e~.
  Eigen::Vector3d infinite_line() const;
};

/// n = p1 x p2, v = p2 - p1. Throws std::invalid_argument ("invalid-line")
/// when p1 == p2 within 1e-12.
PluckerLine plucker_from_points(const Eigen::Vector3d& p1, const Eigen::Vector3d& p2);

/// phi = arccos(v_z/|v|), theta = atan2(v_x, v_y) + pi wrapped to [0, 2*pi).
/// Pole convention theta = pi when v_x = v_y = 0. Throws on zero input
/// ("invalid-direction").
AxisDirection latlong_from_direction(const Eigen::Vector3d& v);

/// Inverse of latlong_from_direction; always unit norm.
Eigen::Vector3d direction_from_latlong(const AxisDirection& a);

/// Rebuilds the Plucker line of an anchored line: the anchor pixel is
/// back-projected at depth 1/r in the reference camera, moved to world via
/// ref_pose_wc, and joined with the axis direction. Throws std::domain_error
/// ("behind-camera") when inv_depth <= 0.
PluckerLine reconstruct_line(const AnchoredLine& line, const Eigen::Vector3d& axis_dir,
                             const Pose& ref_pose_wc, const CameraIntrinsics& k);

/// Conversion to the orthonormal representation. Scale-invariant: scaling
/// (n, v) by any positive factor yields the same OrthoLine. Throws on zero
/// direction ("invalid-line").
OrthoLine ortho_from_plucker(const PluckerLine& l);

/// Inverse conversion; the result is normalized so ||(n, v)|| = 1.
PluckerLine plucker_from_ortho(const OrthoLine& o);

/// Plucker transform by pose_cw: n_c = R*n_w + [t]x*R*v_w, v_c = R*v_w.
PluckerLine transform_line(const PluckerLine& l_w, const Pose& pose_cw);

/// Homogeneous image line l' = K_L * n_c of a camera-frame line.
Eigen::Vector3d project_line(const PluckerLine& l_c, const CameraIntrinsics& k);

/// Signed endpoint-to-line distances (p1~ . l', p2~ . l') / sqrt(l1^2 + l2^2),
/// in pixels. Throws std::domain_error ("degenerate-projection") when
/// l1^2 + l2^2 < 1e-20.
Eigen::Vector2d line_reprojection_error(const Eigen::Vector3d& l_img, const Segment2D& obs);

/// Unit-norm 6-vector with canonical sign (first component of v with
/// |v_i| > 1e-12 made positive; falls back to the n block for zero v).
Eigen::Matrix<double, 6, 1> normalized_plucker(const PluckerLine& l);

/// Projective distance between two lines: Euclidean distance of the
/// canonically normalized 6-vectors, minimized over sign.
double plucker_distance(const PluckerLine& a, const PluckerLine& b);

}  // namespace axisline
