#pragma once

// Accuracy of an automatic plane against ground truth, and mean +/- std
// summaries per target plane.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "vplan/error.hpp"
#include "vplan/geom.hpp"

namespace vplan {

struct PlaneMetrics {
  double normal_deviation_deg = 0.0;  // [0, 90]
  double point_to_plane_mm = 0.0;
};

/// Angle between the plane normals, ignoring their signs.
inline double normal_deviation(const Plane3D& automatic, const Plane3D& truth) {
  double c = std::clamp(std::abs(automatic.normal.dot(truth.normal)), 0.0, 1.0);
  return rad2deg(std::acos(c));
}

/// Distance from the center of the ground-truth image to the automatic plane.
inline double point_to_plane(const SlicePose& truth_pose, const Plane3D& automatic) {
  Vec3 center = image_to_patient(truth_pose, truth_pose.center_pixel());
  return std::abs(automatic.signed_distance(center));
}

inline PlaneMetrics evaluate_plane(const SlicePose& truth_pose, const Plane3D& automatic) {
  return {normal_deviation(automatic, pose_to_plane(truth_pose)),
          point_to_plane(truth_pose, automatic)};
}

struct CaseMetrics {
  std::string exam;
  std::string target;
  PlaneMetrics metrics;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1); 0 for a single value
};

/// Sorted before summing so the result is independent of input order.
inline MeanStd mean_std(std::vector<double> v) {
  if (v.empty()) throw EmptyGroup("cannot summarize an empty group");
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  double mean = sum / v.size();
  if (v.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (v.size() - 1))};
}

struct TargetSummary {
  std::string target;
  std::size_t n = 0;
  MeanStd normal_deviation_deg;
  MeanStd point_to_plane_mm;
};

struct Report {
  std::vector<CaseMetrics> cases;
  std::vector<TargetSummary> targets;  // sorted by target id
  // Mean and spread of the per-target means.
  MeanStd overall_normal_deviation_deg;
  MeanStd overall_point_to_plane_mm;
};

inline Report aggregate(const std::vector<CaseMetrics>& cases) {
  if (cases.empty()) throw EmptyGroup("no cases to aggregate");
  std::map<std::string, std::vector<const CaseMetrics*>> groups;
  for (const auto& c : cases) groups[c.target].push_back(&c);

  Report r;
  r.cases = cases;
  std::vector<double> nd_means, pp_means;
  for (const auto& [target, members] : groups) {
    std::vector<double> nd, pp;
    for (const auto* m : members) {
      nd.push_back(m->metrics.normal_deviation_deg);
      pp.push_back(m->metrics.point_to_plane_mm);
    }
    TargetSummary s{target, members.size(), mean_std(nd), mean_std(pp)};
    nd_means.push_back(s.normal_deviation_deg.mean);
    pp_means.push_back(s.point_to_plane_mm.mean);
    r.targets.push_back(s);
  }
  r.overall_normal_deviation_deg = mean_std(nd_means);
  r.overall_point_to_plane_mm = mean_std(pp_means);
  return r;
}

}  // namespace vplan
