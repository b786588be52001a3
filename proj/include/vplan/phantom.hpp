#pragma once

// Geometry-only synthetic exams with known ground-truth planes.
//
// A left-ventricle long axis is drawn at a random obliquity, and every view is
// placed relative to it the way the clinical protocol prescribes them:
//   p2C  contains the long axis and is orthogonal to the axial stack
//   pSA  orthogonal to p2C, roughly orthogonal to the long axis
//   p4C  oblique to both p2C and pSA
//   2C/3C/4C contain the long axis at distinct rotations about it
//   SAX  orthogonal to the long axis, on the basal side
// Labels are rendered from the true intersections, so the exam doubles as a
// closed-loop oracle for the prescription search.

#include <Eigen/Geometry>

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vplan/error.hpp"
#include "vplan/exam.hpp"
#include "vplan/geom.hpp"
#include "vplan/heatmap.hpp"

namespace vplan {

struct PhantomViewSpec {
  int cols = 2;
  int rows = 2;
  double spacing = 1.0;    // isotropic, mm
  double thickness = 6.0;  // mm
  int slices = 1;
  double interval = 0.0;   // slice-to-slice distance, mm
};

struct NoiseConfig {
  double std = 0.0;
  int blur_radius = 0;  // box blur half-width in pixels, 0 = off

  bool active() const { return std > 0.0 || blur_radius > 0; }
};

struct PhantomConfig {
  std::uint64_t seed = 0;
  // Modal acquisition geometry of a clinical exam.
  PhantomViewSpec axial{256, 192, 1.34, 6.0, 30, 6.0};
  PhantomViewSpec p2c{176, 192, 1.98, 6.0, 1, 0.0};
  PhantomViewSpec p4c{192, 160, 1.77, 6.0, 1, 0.0};
  PhantomViewSpec psa{176, 192, 1.88, 6.0, 8, 12.0};
  PhantomViewSpec c2{156, 192, 1.80, 7.0, 1, 0.0};
  PhantomViewSpec c3{173, 170, 1.67, 7.0, 1, 0.0};
  PhantomViewSpec c4{192, 155, 1.72, 7.0, 1, 0.0};
  PhantomViewSpec sax{161, 192, 1.85, 7.0, 1, 0.0};
  double rotation_range_deg = 30.0;  // per axis, applied to the long axis
  Protocol protocol = Protocol::Standard;
  double alpha = 0.5;
  bool render_labels = true;
  NoiseConfig noise;  // applied to produce PhantomExam::corrupted
  int max_attempts = 100;

  void validate() const {
    for (const auto* v : {&axial, &p2c, &p4c, &psa, &c2, &c3, &c4, &sax}) {
      if (v->cols < 2 || v->rows < 2 || v->slices < 1)
        throw InvariantViolation("phantom view extents must be at least 2x2 with one slice");
      if (!(v->spacing > 0.0) || !(v->thickness > 0.0))
        throw InvariantViolation("phantom spacing and thickness must be positive");
      if (v->slices > 1 && !(v->interval > 0.0))
        throw InvariantViolation("stacked phantom views need a positive slice interval");
    }
    if (rotation_range_deg < 0.0) throw InvariantViolation("rotation range must be >= 0");
    if (!(alpha > 0.0)) throw InvariantViolation("alpha must be positive");
    if (noise.std < 0.0 || noise.blur_radius < 0)
      throw InvariantViolation("noise parameters must be non-negative");
  }
};

struct PhantomExam {
  ExamManifest manifest;
  DependencyMap dependencies;
  std::map<std::string, Plane3D> truth;  // per target view
  LabelSet clean;
  std::optional<LabelSet> corrupted;
  Vec3 center = Vec3::Zero();
  Vec3 long_axis = Vec3::UnitZ();
  int attempts = 0;

  const LabelSet& labels() const { return corrupted ? *corrupted : clean; }

  bool operator==(const PhantomExam&) const = default;
};

inline const std::vector<std::string>& standard_targets() {
  static const std::vector<std::string> t = {"2C", "3C", "4C", "SAX"};
  return t;
}

/// Seeded per-pixel Gaussian noise, clipped to [0, 1], then an optional box
/// blur. Heatmaps are visited in key order so the output depends only on the
/// seed.
inline LabelSet corrupt(const LabelSet& labels, const NoiseConfig& noise, std::uint64_t seed) {
  if (noise.std < 0.0) throw InvariantViolation("noise std must be non-negative");
  if (!noise.active()) return labels;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, noise.std > 0.0 ? noise.std : 1.0);
  LabelSet out = labels;
  for (auto& [key, h] : out) {
    if (noise.std > 0.0)
      for (auto& v : h.values) v = static_cast<float>(std::clamp(v + gauss(rng), 0.0, 1.0));
    if (noise.blur_radius > 0) {
      const int r = noise.blur_radius;
      Heatmap tmp(h.rows, h.cols);
      for (int y = 0; y < h.rows; ++y)
        for (int x = 0; x < h.cols; ++x) {
          double s = 0.0;
          for (int d = -r; d <= r; ++d) s += h.at(std::clamp(x + d, 0, h.cols - 1), y);
          tmp.at(x, y) = static_cast<float>(s / (2 * r + 1));
        }
      for (int y = 0; y < h.rows; ++y)
        for (int x = 0; x < h.cols; ++x) {
          double s = 0.0;
          for (int d = -r; d <= r; ++d) s += tmp.at(x, std::clamp(y + d, 0, h.rows - 1));
          h.at(x, y) = static_cast<float>(s / (2 * r + 1));
        }
    }
  }
  return out;
}

namespace detail {

inline View stacked_view(const std::string& id, ViewRole role, const PhantomViewSpec& spec,
                         const Vec3& center, const Vec3& normal, const Vec3& col_hint) {
  View v{id, role, {}};
  Vec3 n = normal.normalized();
  for (int k = 0; k < spec.slices; ++k) {
    Vec3 c = center + ((k - spec.slices / 2) * spec.interval) * n;
    v.slices.push_back(make_centered_pose(c, n, col_hint, spec.cols, spec.rows, spec.spacing,
                                          spec.spacing, spec.thickness));
  }
  return v;
}

inline Vec3 rotate(const Vec3& v, const Vec3& axis, double deg) {
  return Eigen::AngleAxisd(deg2rad(deg), axis.normalized()) * v;
}

// Rejects draws where any label edge or anchor pair is close to parallel or
// misses the image.
inline bool acceptable(const ExamManifest& exam, const DependencyMap& deps) {
  const double min_sin = std::sin(deg2rad(10.0));
  auto oblique = [&](const Plane3D& a, const Plane3D& b) {
    return a.normal.cross(b.normal).norm() >= min_sin;
  };
  for (const auto& e : deps.entries()) {
    const View& target = exam.view(e.target);
    for (const auto& sid : e.sources) {
      const View& source = exam.view(sid);
      for (const auto& pose : source.slices)
        if (!oblique(target.plane(), pose_to_plane(pose))) return false;
      auto trace = plane_trace(target.plane(), source.reference());
      if (!trace || !clip_line(*trace, source.reference())) return false;
    }
    if (e.sources.size() >= 2) {
      const View& a = exam.view(e.sources[0]);
      const View& b = exam.view(e.sources[1]);
      if (!oblique(a.plane(), b.plane())) return false;
      auto trace = plane_trace(b.plane(), a.reference());
      if (!trace || !clip_line(*trace, a.reference())) return false;
    }
  }
  return true;
}

}  // namespace detail

inline PhantomExam generate(const PhantomConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto signed_uniform = [&](double lo, double hi) {
    double m = uniform(lo, hi);
    return uniform(0.0, 1.0) < 0.5 ? -m : m;
  };
  const DependencyMap deps = default_dependencies(cfg.protocol);
  const Vec3 ez = Vec3::UnitZ();
  // Base-to-apex direction: leftward, anterior and inferior in LPS.
  const Vec3 nominal_axis = Vec3(1.0, -0.8, -1.0).normalized();

  for (int attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
    const double range = cfg.rotation_range_deg;
    Vec3 center(uniform(-10, 10), uniform(-10, 10), uniform(-10, 10));
    Vec3 u = detail::rotate(nominal_axis, Vec3::UnitX(), uniform(-range, range));
    u = detail::rotate(u, Vec3::UnitY(), uniform(-range, range));
    u = detail::rotate(u, Vec3::UnitZ(), uniform(-range, range));
    u.normalize();
    // p2C is spanned by the long axis and the body axis.
    if (std::abs(u.dot(ez)) > std::cos(deg2rad(20.0))) continue;
    const Vec3 n_p2c = u.cross(ez).normalized();

    const Vec3 n_2c = detail::rotate(n_p2c, u, signed_uniform(5.0, 15.0));
    const Vec3 n_3c = detail::rotate(n_p2c, u, uniform(35.0, 55.0));
    const double psi_4c = uniform(70.0, 85.0);
    const Vec3 n_4c = detail::rotate(n_p2c, u, psi_4c);

    // The pseudo 4C follows a pseudo long axis a few degrees off the true one.
    Vec3 n_p4c = detail::rotate(n_p2c, u, psi_4c + uniform(-8.0, 8.0));
    n_p4c = detail::rotate(n_p4c, n_p4c.cross(u), signed_uniform(3.0, 8.0));
    Vec3 n_psa;
    if (cfg.protocol == Protocol::Standard) {
      n_psa = detail::rotate(u, n_p2c, uniform(-10.0, 10.0));
    } else {
      // p4C is prescribed orthogonal to p2C; pSA comes last and is oblique.
      n_p4c = (n_p4c - n_p4c.dot(n_p2c) * n_p2c).normalized();
      Vec3 tilt_axis = detail::rotate(n_p2c, u, uniform(0.0, 360.0));
      n_psa = detail::rotate(u, tilt_axis, signed_uniform(5.0, 12.0));
    }

    ExamManifest exam;
    exam.exam_id = "phantom-" + std::to_string(cfg.seed);
    exam.views.push_back(detail::stacked_view("axial", ViewRole::Axial, cfg.axial, center, ez, Vec3::UnitY()));
    exam.views.push_back(detail::stacked_view("p2C", ViewRole::P2C, cfg.p2c, center, n_p2c, -ez));
    exam.views.push_back(detail::stacked_view("p4C", ViewRole::P4C, cfg.p4c, center, n_p4c, -ez));
    exam.views.push_back(detail::stacked_view("pSA", ViewRole::PSA, cfg.psa, center, n_psa, n_p2c));
    exam.views.push_back(detail::stacked_view("2C", ViewRole::C2, cfg.c2, center, n_2c, u));
    exam.views.push_back(detail::stacked_view("3C", ViewRole::C3, cfg.c3, center, n_3c, u));
    exam.views.push_back(detail::stacked_view("4C", ViewRole::C4, cfg.c4, center, n_4c, u));
    exam.views.push_back(detail::stacked_view("SAX", ViewRole::SAX, cfg.sax, center - 20.0 * u, u, n_p2c));
    if (cfg.protocol != Protocol::Standard) exam.dependencies = deps;

    if (!detail::acceptable(exam, deps)) continue;

    PhantomExam out;
    out.manifest = std::move(exam);
    out.dependencies = deps;
    for (const auto& e : deps.entries()) out.truth.emplace(e.target, out.manifest.view(e.target).plane());
    out.center = center;
    out.long_axis = u;
    out.attempts = attempt;
    if (cfg.render_labels) {
      out.clean = gen_labels(out.manifest, deps, cfg.alpha);
      // Noise stream is decorrelated from the geometry stream.
      if (cfg.noise.active()) out.corrupted = corrupt(out.clean, cfg.noise, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    }
    return out;
  }
  throw DegenerateGeometry("no acceptable phantom geometry after " + std::to_string(cfg.max_attempts) +
                           " attempts (seed " + std::to_string(cfg.seed) + ")");
}

}  // namespace vplan
