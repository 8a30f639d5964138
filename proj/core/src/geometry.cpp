#include "axisline/geometry.hpp"

#include <cmath>

namespace axisline {

namespace {
constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kDegenerateSq = 1e-20;  // Eq. 8 guard on l1^2 + l2^2
}  // namespace

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

Eigen::Matrix3d rotation_exp(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  if (theta < 1e-12) {
    return Eigen::Matrix3d::Identity() + skew(w);
  }
  return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

Eigen::Vector3d rotation_log(const Eigen::Matrix3d& R) {
  Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

double angle_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  if (a.isZero() || b.isZero()) return 0.0;
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

double projective_angle(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  if (a.isZero() || b.isZero()) return 0.0;
  return std::atan2(a.cross(b).norm(), std::abs(a.dot(b)));
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> tangent_basis(const Eigen::Vector3d& v) {
  const Eigen::Vector3d ref =
      std::abs(v.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
  const Eigen::Vector3d b1 = ref.cross(v).normalized();
  const Eigen::Vector3d b2 = v.cross(b1);
  return {b1, b2};
}

Eigen::Vector3d sphere_retract(const Eigen::Vector3d& v, double d1, double d2) {
  const auto [b1, b2] = tangent_basis(v);
  const Eigen::Vector3d step = d1 * b1 + d2 * b2;
  const double norm = step.norm();
  if (norm < 1e-14) {
    return (v + step).normalized();
  }
  return std::cos(norm) * v + std::sin(norm) / norm * step;
}

Pose Pose::from_rotvec(const Eigen::Vector3d& w, const Eigen::Vector3d& t) {
  return Pose{rotation_exp(w), t};
}

Pose Pose::inverse() const {
  Pose out;
  out.rotation = rotation.transpose();
  out.translation = -(out.rotation * translation);
  return out;
}

Pose Pose::operator*(const Pose& other) const {
  return Pose{rotation * other.rotation, rotation * other.translation + translation};
}

Eigen::Vector3d Pose::operator*(const Eigen::Vector3d& p) const {
  return rotation * p + translation;
}

bool Pose::is_orthonormal(double tol) const {
  const Eigen::Matrix3d err = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
  return err.norm() < tol && rotation.determinant() > 0;
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return k;
}

Eigen::Vector3d CameraIntrinsics::backproject(const Eigen::Vector2d& pixel) const {
  return {(pixel.x() - cx) / fx, (pixel.y() - cy) / fy, 1.0};
}

Eigen::Vector2d CameraIntrinsics::project(const Eigen::Vector3d& p_cam) const {
  return {fx * p_cam.x() / p_cam.z() + cx, fy * p_cam.y() / p_cam.z() + cy};
}

Eigen::Matrix3d CameraIntrinsics::line_projection() const {
  Eigen::Matrix3d kl;
  kl << fy, 0, 0, 0, fx, 0, -fy * cx, -fx * cy, fx * fy;
  return kl;
}

Eigen::Vector3d Segment2D::infinite_line() const {
  const Eigen::Vector3d sh(s.x(), s.y(), 1.0);
  const Eigen::Vector3d eh(e.x(), e.y(), 1.0);
  return sh.cross(eh);
}

PluckerLine plucker_from_points(const Eigen::Vector3d& p1, const Eigen::Vector3d& p2) {
  if ((p2 - p1).norm() < 1e-12) {
    throw std::invalid_argument("invalid-line: coincident points");
  }
  return PluckerLine{p1.cross(p2), p2 - p1};
}

AxisDirection latlong_from_direction(const Eigen::Vector3d& v) {
  const double norm = v.norm();
  if (norm <= 0.0) {
    throw std::invalid_argument("invalid-direction: zero vector");
  }
  AxisDirection a;
  a.phi = std::acos(std::clamp(v.z() / norm, -1.0, 1.0));
  if (v.x() == 0.0 && v.y() == 0.0) {
    a.theta = M_PI;  // pole convention
  } else {
    a.theta = std::atan2(v.x(), v.y()) + M_PI;
    if (a.theta >= kTwoPi) a.theta -= kTwoPi;
  }
  return a;
}

Eigen::Vector3d direction_from_latlong(const AxisDirection& a) {
  const double sp = std::sin(a.phi);
  return {-sp * std::sin(a.theta), -sp * std::cos(a.theta), std::cos(a.phi)};
}

PluckerLine reconstruct_line(const AnchoredLine& line, const Eigen::Vector3d& axis_dir,
                             const Pose& ref_pose_wc, const CameraIntrinsics& k) {
  if (line.inv_depth <= 0.0) {
    throw std::domain_error("behind-camera: inv_depth <= 0");
  }
  const Eigen::Vector3d p_cam = k.backproject(line.anchor_pixel) / line.inv_depth;
  const Eigen::Vector3d p_world = ref_pose_wc * p_cam;
  return PluckerLine{p_world.cross(axis_dir), axis_dir};
}

OrthoLine ortho_from_plucker(const PluckerLine& l) {
  const double vn = l.v.norm();
  if (vn < 1e-12) {
    throw std::invalid_argument("invalid-line: zero direction");
  }
  const double nn = l.n.norm();
  const Eigen::Vector3d u2 = l.v / vn;
  Eigen::Vector3d u1;
  if (nn < 1e-12 * vn) {
    // Line through the origin: any unit vector orthogonal to v completes U.
    u1 = tangent_basis(u2).first;
  } else {
    u1 = l.n / nn;
  }
  Eigen::Matrix3d u;
  u.col(0) = u1;
  u.col(1) = u2;
  u.col(2) = u1.cross(u2);

  OrthoLine o;
  o.psi = rotation_log(u);
  o.phi = std::atan2(vn, nn);
  return o;
}

PluckerLine plucker_from_ortho(const OrthoLine& o) {
  const Eigen::Matrix3d u = o.rotation();
  return PluckerLine{std::cos(o.phi) * u.col(0), std::sin(o.phi) * u.col(1)};
}

PluckerLine transform_line(const PluckerLine& l_w, const Pose& pose_cw) {
  const Eigen::Vector3d v_c = pose_cw.rotation * l_w.v;
  const Eigen::Vector3d n_c = pose_cw.rotation * l_w.n + pose_cw.translation.cross(v_c);
  return PluckerLine{n_c, v_c};
}

Eigen::Vector3d project_line(const PluckerLine& l_c, const CameraIntrinsics& k) {
  return k.line_projection() * l_c.n;
}

Eigen::Vector2d line_reprojection_error(const Eigen::Vector3d& l_img, const Segment2D& obs) {
  const double norm_sq = l_img.x() * l_img.x() + l_img.y() * l_img.y();
  if (norm_sq < kDegenerateSq) {
    throw std::domain_error("degenerate-projection: image line has no direction");
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  const Eigen::Vector3d p1(obs.s.x(), obs.s.y(), 1.0);
  const Eigen::Vector3d p2(obs.e.x(), obs.e.y(), 1.0);
  return {p1.dot(l_img) * inv, p2.dot(l_img) * inv};
}

Eigen::Matrix<double, 6, 1> normalized_plucker(const PluckerLine& l) {
  Eigen::Matrix<double, 6, 1> stacked;
  stacked << l.n, l.v;
  const double norm = stacked.norm();
  if (norm > 0.0) stacked /= norm;
  for (int i = 3; i < 6; ++i) {
    if (std::abs(stacked[i]) > 1e-12) {
      if (stacked[i] < 0.0) stacked = -stacked;
      return stacked;
    }
  }
  for (int i = 0; i < 3; ++i) {
    if (std::abs(stacked[i]) > 1e-12) {
      if (stacked[i] < 0.0) stacked = -stacked;
      break;
    }
  }
  return stacked;
}

double plucker_distance(const PluckerLine& a, const PluckerLine& b) {
  const Eigen::Matrix<double, 6, 1> la = normalized_plucker(a);
  const Eigen::Matrix<double, 6, 1> lb = normalized_plucker(b);
  return std::min((la - lb).norm(), (la + lb).norm());
}

}  // namespace axisline
