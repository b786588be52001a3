#pragma once

#include <filesystem>
#include <limits>
#include <random>

#include "vplan/vplan.hpp"

namespace vtest {

using namespace vplan;

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec3 v;
  do v = Vec3(g(rng), g(rng), g(rng));
  while (v.norm() < 1e-3);
  return v.normalized();
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Random orthonormal pose with random spacing, extent and origin.
inline SlicePose random_pose(std::mt19937_64& rng) {
  Vec3 r = random_unit(rng);
  Vec3 c = r.cross(random_unit(rng)).normalized();
  Vec3 origin(uniform(rng, -200, 200), uniform(rng, -200, 200), uniform(rng, -200, 200));
  return SlicePose(origin, r, c, uniform(rng, 0.5, 3.0), uniform(rng, 0.5, 3.0), uniform_int(rng, 16, 300),
                   uniform_int(rng, 16, 300), uniform(rng, 2.0, 10.0));
}

inline SlicePose axial_pose(double spacing = 1.0, int cols = 10, int rows = 10) {
  return SlicePose(Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY(), spacing, spacing, cols, rows, 6.0);
}

inline Heatmap random_heatmap(std::mt19937_64& rng, int rows, int cols) {
  Heatmap h(rows, cols);
  for (auto& v : h.values) v = static_cast<float>(uniform(rng, 0.0, 1.0));
  return h;
}

/// Shared across tests so the phantom is only built once per seed.
inline const PhantomExam& phantom(std::uint64_t seed) {
  static std::map<std::uint64_t, PhantomExam> cache;
  auto it = cache.find(seed);
  if (it == cache.end()) {
    PhantomConfig cfg;
    cfg.seed = seed;
    it = cache.emplace(seed, generate(cfg)).first;
  }
  return it->second;
}

}  // namespace vtest

namespace vtest {

/// Anchor position (in steps) where `plane` crosses the anchor segment.
inline double crossing_index(const AnchorSegment& anchor, const Plane3D& plane) {
  double d0 = plane.signed_distance(anchor.start);
  double slope = plane.normal.dot(anchor.direction());
  return -d0 / slope / anchor.step_mm;
}

/// Search box of +/- `steps` anchor steps and +/- `degrees` around a plane.
inline SearchRanges ranges_around(const AnchorSegment& anchor, const Plane3D& plane, int steps, int degrees) {
  auto a = angles_from_normal(plane.normal);
  int idx = static_cast<int>(std::lround(crossing_index(anchor, plane)));
  int t = static_cast<int>(std::lround(a.theta)), p = static_cast<int>(std::lround(a.phi));
  return {idx - steps, idx + steps, t - degrees, t + degrees, p - degrees, p + degrees};
}

/// Every view 48 x 48 pixels at 6 mm, for fast exhaustive comparisons.
inline PhantomConfig tiny_config(std::uint64_t seed) {
  PhantomConfig cfg;
  cfg.seed = seed;
  for (auto* v : {&cfg.axial, &cfg.p2c, &cfg.p4c, &cfg.psa, &cfg.c2, &cfg.c3, &cfg.c4, &cfg.sax}) {
    v->cols = v->rows = 48;
    v->spacing = 6.0;
  }
  return cfg;
}

inline const std::filesystem::path kGoldenDir = VPLAN_GOLDEN_DIR;

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Two 3 x 4 channels, including values that stress the float encoding:
// negative zero, a subnormal and the largest finite float.
inline HeatmapFile golden_heatmaps() {
  HeatmapFile f{3, 4, {}};
  for (int c = 0; c < 2; ++c) {
    Heatmap h(3, 4);
    for (int i = 0; i < 12; ++i) h.values[i] = static_cast<float>(c * 12 + i) * 0.125f - 1.0f;
    f.channels.push_back(h);
  }
  f.channels[1].values[0] = -0.0f;
  f.channels[1].values[1] = std::numeric_limits<float>::denorm_min();
  f.channels[1].values[2] = std::numeric_limits<float>::max();
  return f;
}

inline Overlay golden_overlay() {
  Heatmap bg(12, 16);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 16; ++x) bg.at(x, y) = static_cast<float>((x + y) % 5) / 4.0f;
  return render_overlay(16, 12,
                        {{Line2D::canonical(0, 1, -4), OverlayLabel::Truth},
                         {Line2D::canonical(1, 1, -14), OverlayLabel::Automatic},
                         {Line2D::canonical(0, 1, -4), OverlayLabel::Automatic},
                         {Line2D::canonical(1, -0.2, -11), OverlayLabel::Truth}},
                        &bg);
}

}  // namespace vtest
