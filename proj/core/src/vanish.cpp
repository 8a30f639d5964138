#include "axisline/vanish.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace axisline {

namespace {

constexpr double kInfinityZ = 1e-8;  // |z| below this: VP at infinity

double rad(double d) { return d * M_PI / 180.0; }

/// Unsigned angle between 2D directions modulo 180 degrees, radians.
double line_angle(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const double denom = a.norm() * b.norm();
  if (denom <= 0.0) return 0.0;
  const double c = std::clamp(std::abs(a.dot(b)) / denom, 0.0, 1.0);
  return std::acos(c);
}

/// Direction from the segment midpoint toward a homogeneous image point.
Eigen::Vector2d direction_to_vp(const Segment2D& seg, const Eigen::Vector3d& vp) {
  if (std::abs(vp.z()) > kInfinityZ) {
    return vp.head<2>() / vp.z() - seg.midpoint();
  }
  return vp.head<2>();
}

}  // namespace

std::string to_string(SegmentClass c) {
  switch (c) {
    case SegmentClass::Vertical: return "vertical";
    case SegmentClass::Horizontal0: return "horizontal-0";
    case SegmentClass::Horizontal1: return "horizontal-1";
    case SegmentClass::Unstructured: return "unstructured";
  }
  return "unstructured";
}

std::optional<SegmentClass> segment_class_from_string(const std::string& s) {
  if (s == "vertical") return SegmentClass::Vertical;
  if (s == "horizontal-0") return SegmentClass::Horizontal0;
  if (s == "horizontal-1") return SegmentClass::Horizontal1;
  if (s == "unstructured") return SegmentClass::Unstructured;
  return std::nullopt;
}

std::vector<std::pair<SegmentClass, Eigen::Vector3d>> VPResult::labeled_vps() const {
  std::vector<std::pair<SegmentClass, Eigen::Vector3d>> out;
  if (vp_vertical) out.emplace_back(SegmentClass::Vertical, *vp_vertical);
  if (vp_h0) out.emplace_back(SegmentClass::Horizontal0, *vp_h0);
  if (vp_h1) out.emplace_back(SegmentClass::Horizontal1, *vp_h1);
  return out;
}

Eigen::Vector3d horizontal_seed(const Eigen::Vector3d& d_v) {
  const double sin_a = std::hypot(d_v.x(), d_v.y());
  if (sin_a < 1e-12) {
    return Eigen::Vector3d::UnitX();  // pole: b = 0
  }
  const double b = std::atan2(d_v.x(), d_v.y());
  return {std::cos(b), -std::sin(b), 0.0};
}

std::vector<VPProposal> generate_proposals(const Eigen::Vector3d& d_v) {
  const Eigen::Vector3d seed = horizontal_seed(d_v);
  std::vector<VPProposal> proposals;
  proposals.reserve(360);
  for (int i = 1; i <= 360; ++i) {
    const Eigen::Vector3d d_h = Eigen::AngleAxisd(rad(i), d_v) * seed;
    proposals.push_back(VPProposal{{d_v, d_h, d_v.cross(d_h)}, i});
  }
  return proposals;
}

int score_proposal(const VPProposal& p, const std::vector<Segment2D>& segments,
                   const CameraIntrinsics& k, double angle_tol_deg) {
  const Eigen::Matrix3d km = k.matrix();
  std::array<Eigen::Vector3d, 3> vps;
  for (int j = 0; j < 3; ++j) vps[j] = km * p.dirs[j];

  const double tol = rad(angle_tol_deg);
  int score = 0;
  for (const auto& seg : segments) {
    const Eigen::Vector2d dir = seg.direction();
    for (const auto& vp : vps) {
      if (line_angle(dir, direction_to_vp(seg, vp)) <= tol) {
        ++score;
        break;
      }
    }
  }
  return score;
}

Eigen::Vector3d refine_vp(const std::vector<Segment2D>& cluster) {
  if (cluster.size() < 2) {
    throw std::invalid_argument("underdetermined: need at least two segments");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(cluster.size()), 3);
  for (size_t i = 0; i < cluster.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = cluster[i].infinite_line().normalized();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(1) < 1e-12 * sv(0)) {
    throw std::domain_error("degenerate-cluster: all segments on one line");
  }
  return svd.matrixV().col(2);
}

bool vp_consistent(const Eigen::Vector3d& vp, const Segment2D& seg, const VPTolerances& tol,
                   double* measure) {
  // Endpoint distance to the line joining the VP and the segment midpoint.
  // Stays pixel-valued for any VP distance, including points at infinity,
  // unlike the raw VP-to-line distance whose lever arm grows with the VP.
  const Eigen::Vector2d mid = seg.midpoint();
  const Eigen::Vector3d line = vp.cross(Eigen::Vector3d(mid.x(), mid.y(), 1.0));
  const double dir_norm = line.head<2>().norm();
  if (dir_norm < 1e-12) {
    if (measure) *measure = 0.0;  // VP on the midpoint
    return true;
  }
  const Eigen::Vector3d l = line / dir_norm;
  const double d = std::max(std::abs(Eigen::Vector3d(seg.s.x(), seg.s.y(), 1.0).dot(l)),
                            std::abs(Eigen::Vector3d(seg.e.x(), seg.e.y(), 1.0).dot(l)));
  if (measure) *measure = d;
  return d <= tol.dist_tol_px;
}

std::map<int, SegmentClass> classify_segments(
    const std::vector<Segment2D>& segments,
    const std::vector<std::pair<SegmentClass, Eigen::Vector3d>>& vps, const VPTolerances& tol) {
  std::map<int, SegmentClass> classes;
  for (size_t i = 0; i < segments.size(); ++i) {
    SegmentClass best = SegmentClass::Unstructured;
    double best_measure = std::numeric_limits<double>::infinity();
    for (const auto& [label, vp] : vps) {
      double measure = 0.0;
      if (vp_consistent(vp, segments[i], tol, &measure) && measure < best_measure) {
        best_measure = measure;
        best = label;
      }
    }
    classes[static_cast<int>(i)] = best;
  }
  return classes;
}

VPResult estimate_frame(const std::vector<Segment2D>& segments, const Eigen::Vector3d& d_v_world,
                        const Pose& pose_cw, const CameraIntrinsics& k, const VPTolerances& tol) {
  VPResult result;
  if (segments.empty()) return result;

  const Eigen::Vector3d d_v = (pose_cw.rotation * d_v_world).normalized();
  const auto proposals = generate_proposals(d_v);

  int best_score = 0;
  const VPProposal* best = nullptr;
  for (const auto& p : proposals) {
    const int s = score_proposal(p, segments, k, tol.angle_tol_deg);
    if (s > best_score) {
      best_score = s;
      best = &p;
    }
  }
  if (best == nullptr) {
    for (size_t i = 0; i < segments.size(); ++i) {
      result.classes[static_cast<int>(i)] = SegmentClass::Unstructured;
    }
    return result;
  }

  // Coarse clustering against the winning proposal's three VPs.
  const Eigen::Matrix3d km = k.matrix();
  std::array<Eigen::Vector3d, 3> coarse;
  for (int j = 0; j < 3; ++j) coarse[j] = km * best->dirs[j];

  const double ang_tol = rad(tol.angle_tol_deg);
  std::array<std::vector<Segment2D>, 3> clusters;
  for (const auto& seg : segments) {
    int best_j = -1;
    double best_ang = ang_tol;
    for (int j = 0; j < 3; ++j) {
      const double a = line_angle(seg.direction(), direction_to_vp(seg, coarse[j]));
      if (a <= best_ang) {
        best_ang = a;
        best_j = j;
      }
    }
    if (best_j >= 0) clusters[static_cast<size_t>(best_j)].push_back(seg);
  }

  auto refine = [&](int j) -> std::optional<Eigen::Vector3d> {
    if (clusters[static_cast<size_t>(j)].size() < 2) return std::nullopt;
    try {
      return refine_vp(clusters[static_cast<size_t>(j)]);
    } catch (const std::domain_error&) {
      return std::nullopt;
    }
  };
  result.vp_vertical = refine(0);
  result.vp_h0 = refine(1);
  result.vp_h1 = refine(2);

  result.classes = classify_segments(segments, result.labeled_vps(), tol);
  return result;
}

}  // namespace axisline
