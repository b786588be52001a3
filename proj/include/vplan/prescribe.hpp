#pragma once

// Plane prescription by multi-view heatmap aggregation.
//
// A candidate plane is (anchor point, polar angle, azimuth). Its score is the
// sum of source heatmap values sampled along its intersection with every
// source slice. The anchor point is restricted to the intersection segment of
// two source views, and the argmax is found with a coarse-to-fine grid search.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vplan/error.hpp"
#include "vplan/exam.hpp"
#include "vplan/geom.hpp"
#include "vplan/heatmap.hpp"

namespace vplan {

enum class SamplingMode { Bilinear, Nearest };

/// How per-line samples are combined. Sum is the literal aggregation; Mean
/// divides each line's sum by its sample count.
enum class Aggregation { Sum, Mean };

/// One source view with the heatmap channel of a single target per slice.
struct SourceView {
  std::string id;
  std::vector<SlicePose> slices;
  std::vector<Heatmap> heatmaps;

  std::size_t reference_index() const { return slices.size() / 2; }
  const SlicePose& reference() const { return slices.at(reference_index()); }
};

struct LineSample {
  double sum = 0.0;
  int count = 0;
};

inline double sample_bilinear(const Heatmap& h, double x, double y) {
  x = std::clamp(x, 0.0, h.cols - 1.0);
  y = std::clamp(y, 0.0, h.rows - 1.0);
  int x0 = std::min(static_cast<int>(x), h.cols - 2);
  int y0 = std::min(static_cast<int>(y), h.rows - 2);
  double fx = x - x0;
  double fy = y - y0;
  double v00 = h.at(x0, y0), v10 = h.at(x0 + 1, y0);
  double v01 = h.at(x0, y0 + 1), v11 = h.at(x0 + 1, y0 + 1);
  return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11);
}

inline double sample_nearest(const Heatmap& h, double x, double y) {
  int xi = std::clamp(static_cast<int>(std::lround(x)), 0, h.cols - 1);
  int yi = std::clamp(static_cast<int>(std::lround(y)), 0, h.rows - 1);
  return h.at(xi, yi);
}

/// Samples spaced as close to one pixel as an integer count allows, both
/// endpoints included. A segment of integer length L gets L + 1 samples.
inline LineSample sample_line(const Heatmap& h, const Segment2D& seg, SamplingMode mode) {
  const Vec2 delta = seg.end - seg.start;
  const long n = std::lround(delta.norm());
  LineSample out;
  for (long k = 0; k <= n; ++k) {
    Vec2 p = n == 0 ? seg.start : Vec2(seg.start + (delta * static_cast<double>(k)) / static_cast<double>(n));
    out.sum += mode == SamplingMode::Bilinear ? sample_bilinear(h, p.x(), p.y())
                                              : sample_nearest(h, p.x(), p.y());
    ++out.count;
  }
  return out;
}

inline double sample_segment(const Heatmap& h, const Segment2D& seg,
                             SamplingMode mode = SamplingMode::Bilinear) {
  return sample_line(h, seg, mode).sum;
}

struct SourceSegment {
  std::string view;
  int slice = 0;
  Segment2D segment;
};

struct ScoreOptions {
  SamplingMode sampling = SamplingMode::Bilinear;
  Aggregation aggregation = Aggregation::Sum;
};

/// Aggregated response of `plane` over all source slices. Slices parallel to
/// the plane, or whose trace misses the image, contribute zero.
inline double score_plane(const Plane3D& plane, std::span<const SourceView> sources,
                          const ScoreOptions& opt = {},
                          std::vector<SourceSegment>* segments = nullptr) {
  double total = 0.0;
  for (const auto& src : sources) {
    for (std::size_t k = 0; k < src.slices.size(); ++k) {
      auto trace = plane_trace(plane, src.slices[k]);
      if (!trace) continue;
      auto seg = clip_line(*trace, src.slices[k]);
      if (!seg) continue;
      LineSample s = sample_line(src.heatmaps[k], *seg, opt.sampling);
      total += opt.aggregation == Aggregation::Sum ? s.sum : s.sum / s.count;
      if (segments) segments->push_back({src.id, static_cast<int>(k), *seg});
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Anchor segment

struct AnchorSegment {
  Vec3 start;
  Vec3 end;
  double step_mm = 1.0;
  std::string host_view;
  std::string partner_view;

  double length() const { return (end - start).norm(); }
  Vec3 direction() const { return (end - start).normalized(); }
  int count() const { return static_cast<int>(std::floor(length() / step_mm + 1e-9)) + 1; }
  Vec3 point(int index) const { return start + (index * step_mm) * direction(); }
};

/// Intersection of two source views' reference slices, clipped to the first
/// view's image. Defaults to the first two sources.
inline AnchorSegment build_anchor(std::span<const SourceView> sources,
                                  std::optional<std::pair<std::size_t, std::size_t>> pair = {}) {
  if (sources.size() < 2)
    throw SingleSourceView(
        "an anchor segment needs two source views; prescribe from a single view with "
        "line_search_degenerate");
  auto [i, j] = pair.value_or(std::pair<std::size_t, std::size_t>{0, 1});
  if (i >= sources.size() || j >= sources.size() || i == j)
    throw InvariantViolation("invalid anchor pair");
  const SourceView& host = sources[i];
  const SourceView& partner = sources[j];
  Line3D line = [&] {
    try {
      return intersect_planes(pose_to_plane(host.reference()), pose_to_plane(partner.reference()));
    } catch (const ParallelPlanes&) {
      throw ParallelPlanes("anchor views '" + host.id + "' and '" + partner.id + "' are parallel");
    }
  }();
  auto seg = clip_line(line3d_to_line2d(line, host.reference()), host.reference());
  if (!seg || seg->length() <= 0.0)
    throw EmptyIntersection("views '" + host.id + "' and '" + partner.id +
                            "' do not intersect inside '" + host.id + "'");
  return {image_to_patient(host.reference(), seg->start),
          image_to_patient(host.reference(), seg->end), host.reference().mean_spacing(),
          host.id, partner.id};
}

// ---------------------------------------------------------------------------
// Search configuration

struct PyramidLevel {
  int position_step = 1;  // anchor steps (or pixels for the line search)
  int angle_step = 1;     // degrees
  // Neighbourhood half-width around the previous incumbent; 0 means "the
  // previous level's step". Ignored on the first level.
  int position_radius = 0;
  int angle_radius = 0;
};

/// Inclusive integer bounds on the candidate grid. Azimuth bounds may extend
/// below 0 or above 359; they are wrapped when evaluated.
struct SearchRanges {
  int anchor_lo = 0, anchor_hi = 0;
  int theta_lo = 0, theta_hi = 180;
  int phi_lo = 0, phi_hi = 359;
};

struct SearchConfig {
  std::vector<PyramidLevel> levels = {{15, 15}, {5, 5}, {1, 1}};
  ScoreOptions scoring;
  std::optional<SearchRanges> ranges;
  // Every level except the last scores against heatmaps blurred with
  // sigma = coarse_smoothing * position_step pixels, so a coarse grid still
  // sees ridges that fall between its samples. 0 scores all levels raw.
  double coarse_smoothing = 0.5;
  // Incumbents carried from one level to the next.
  int beam = 1;
  // A refinement level re-centres on its incumbent and scans again, up to
  // this many times, until the incumbent stops moving. 1 is a single scan.
  int passes = 16;
  int threads = 1;
  double exhaustive_cap = 5e7;

  int position_radius(std::size_t level) const {
    const auto& l = levels[level];
    return l.position_radius > 0 ? l.position_radius : levels[level - 1].position_step;
  }
  int angle_radius(std::size_t level) const {
    const auto& l = levels[level];
    return l.angle_radius > 0 ? l.angle_radius : levels[level - 1].angle_step;
  }
  double smoothing(std::size_t level) const {
    return level + 1 < levels.size() ? coarse_smoothing * levels[level].position_step : 0.0;
  }

  void validate() const {
    if (levels.empty()) throw InvariantViolation("search needs at least one pyramid level");
    for (std::size_t k = 0; k < levels.size(); ++k) {
      if (levels[k].position_step < 1 || levels[k].angle_step < 1)
        throw InvariantViolation("pyramid steps must be positive integers");
      if (k == 0) continue;
      if (levels[k].position_step >= levels[k - 1].position_step ||
          levels[k].angle_step >= levels[k - 1].angle_step)
        throw InvariantViolation("pyramid steps must be strictly decreasing");
      if (position_radius(k) < levels[k].position_step || angle_radius(k) < levels[k].angle_step)
        throw InvariantViolation("refinement radius must be at least the level step");
    }
    if (coarse_smoothing < 0.0) throw InvariantViolation("coarse smoothing must be >= 0");
    if (beam < 1) throw InvariantViolation("beam must be >= 1");
    if (passes < 1) throw InvariantViolation("passes must be >= 1");
    if (threads < 1) throw InvariantViolation("threads must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Results

struct Candidate {
  int anchor_index = 0;
  int theta = 0;  // degrees
  int phi = 0;    // degrees, [0, 360)

  auto operator<=>(const Candidate&) const = default;
};

struct LineCandidate {
  int offset_index = 0;  // offset in pixels = offset_index - max_offset
  int angle = 0;         // degrees, [0, 180)

  auto operator<=>(const LineCandidate&) const = default;
};

struct PrescriptionResult {
  Plane3D plane{Vec3::Zero(), Vec3::UnitZ()};
  double score = 0.0;
  std::vector<SourceSegment> segments;
  std::size_t visited = 0;
  bool degenerate_zero_score = false;
  // Raw score of each level's incumbent. Non-decreasing when
  // coarse_smoothing is 0; with smoothing only the last entry is guaranteed
  // to be the largest.
  std::vector<double> level_scores;

  std::optional<Candidate> candidate;
  std::optional<AnchorSegment> anchor;
  // Set by the single-view line search.
  std::optional<LineCandidate> line_candidate;
  std::optional<Line2D> source_line;
};

inline Plane3D candidate_plane(const Candidate& c, const AnchorSegment& anchor) {
  return Plane3D(anchor.point(c.anchor_index),
                 normal_from_angles({static_cast<double>(c.theta), static_cast<double>(c.phi)}));
}

inline double score_candidate(const Candidate& c, const AnchorSegment& anchor,
                              std::span<const SourceView> sources, const ScoreOptions& opt = {}) {
  return score_plane(candidate_plane(c, anchor), sources, opt);
}

inline SearchRanges full_ranges(const AnchorSegment& anchor) {
  return {0, anchor.count() - 1, 0, 180, 0, 359};
}

namespace detail {

inline int wrap360(int deg) {
  int r = deg % 360;
  return r < 0 ? r + 360 : r;
}

inline std::vector<int> stepped(int lo, int hi, int step) {
  std::vector<int> v;
  for (int x = lo; x <= hi; x += step) v.push_back(x);
  return v;
}

/// Multiples of `step` within [-radius, radius].
inline std::vector<int> offsets(int radius, int step) {
  return stepped(-(radius / step) * step, radius, step);
}

template <typename Key>
struct Scored {
  Key key;
  double score;
};

// Higher score first, then the smaller key. A total order, so selections do
// not depend on evaluation order or thread count.
template <typename Key>
bool better(const Scored<Key>& a, const Scored<Key>& b) {
  return a.score > b.score || (a.score == b.score && a.key < b.key);
}

/// The `keep` best of `count` keys, evaluated block by block.
template <typename Key, typename KeyAt, typename Score>
std::vector<Scored<Key>> top_k(std::size_t count, KeyAt&& key_at, Score&& score, int threads,
                               std::size_t keep) {
  constexpr std::size_t kBlock = 8192;
  std::vector<Scored<Key>> best;
  std::vector<double> scores;
  for (std::size_t base = 0; base < count; base += kBlock) {
    std::size_t n = std::min(kBlock, count - base);
    scores.assign(n, 0.0);
    run_parallel(n, threads, [&](std::size_t i) { scores[i] = score(key_at(base + i)); });
    for (std::size_t i = 0; i < n; ++i) best.push_back({key_at(base + i), scores[i]});
    std::sort(best.begin(), best.end(), better<Key>);
    if (best.size() > keep) best.resize(keep);
  }
  return best;
}

inline std::vector<SourceView> smoothed(std::span<const SourceView> sources, double sigma) {
  std::vector<SourceView> out(sources.begin(), sources.end());
  if (sigma > 0.0)
    for (auto& s : out)
      for (auto& h : s.heatmaps) h = gaussian_blur(h, sigma);
  return out;
}

/// Shared coarse-to-fine driver. `first_level` lists the initial grid,
/// `neighbours(incumbent, level)` the refinement grid around an incumbent,
/// and `score(key, sources)` evaluates one key.
template <typename Key, typename First, typename Neighbours, typename ScoreFn>
std::vector<Scored<Key>> run_pyramid(std::span<const SourceView> sources, const SearchConfig& cfg,
                                     First&& first_level, Neighbours&& neighbours, ScoreFn&& score,
                                     PrescriptionResult& out) {
  std::vector<Scored<Key>> incumbents;
  // Earlier incumbents stay in every later scan, so the raw score of the
  // final answer is never below theirs.
  std::vector<Key> history;
  for (std::size_t level = 0; level < cfg.levels.size(); ++level) {
    const double sigma = cfg.smoothing(level);
    std::vector<SourceView> blurred;
    std::span<const SourceView> level_sources = sources;
    if (sigma > 0.0) {
      blurred = smoothed(sources, sigma);
      level_sources = blurred;
    }
    const std::size_t keep = level + 1 == cfg.levels.size() ? 1 : static_cast<std::size_t>(cfg.beam);
    auto scan = [&](const std::vector<Key>& keys) {
      out.visited += keys.size();
      return top_k<Key>(
          keys.size(), [&](std::size_t i) { return keys[i]; },
          [&](const Key& k) { return score(k, level_sources); }, cfg.threads, keep);
    };

    if (level == 0) {
      incumbents = scan(first_level());
    } else {
      for (int pass = 0; pass < cfg.passes; ++pass) {
        std::vector<Key> keys = history;
        for (const auto& inc : incumbents) {
          auto n = neighbours(inc.key, level);
          keys.insert(keys.end(), n.begin(), n.end());
        }
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
        auto next = scan(keys);
        bool moved = next.size() != incumbents.size();
        for (std::size_t i = 0; !moved && i < next.size(); ++i) moved = !(next[i].key == incumbents[i].key);
        incumbents = std::move(next);
        if (!moved) break;
      }
    }
    for (const auto& inc : incumbents) history.push_back(inc.key);
    out.level_scores.push_back(sigma > 0.0 ? score(incumbents.front().key, sources)
                                           : incumbents.front().score);
  }
  return incumbents;
}

struct RangeView {
  SearchRanges r;

  bool phi_circular() const { return r.phi_hi - r.phi_lo + 1 >= 360; }

  void clamp_to(const AnchorSegment& anchor) {
    r.anchor_lo = std::max(r.anchor_lo, 0);
    r.anchor_hi = std::min(r.anchor_hi, anchor.count() - 1);
    r.theta_lo = std::max(r.theta_lo, 0);
    r.theta_hi = std::min(r.theta_hi, 180);
    r.phi_hi = std::min(r.phi_hi, r.phi_lo + 359);
    if (r.anchor_lo > r.anchor_hi || r.theta_lo > r.theta_hi || r.phi_lo > r.phi_hi)
      throw InvariantViolation("empty search range");
  }

  // Unwrapped azimuth of a normalized value, or nullopt if outside the range.
  std::optional<int> unwrap_phi(int phi) const {
    if (phi_circular()) return phi;
    int u = r.phi_lo + wrap360(phi - r.phi_lo);
    if (u > r.phi_hi) return std::nullopt;
    return u;
  }

  std::vector<Candidate> grid(int position_step, int angle_step) const {
    std::vector<Candidate> out;
    for (int a : stepped(r.anchor_lo, r.anchor_hi, position_step))
      for (int t : stepped(r.theta_lo, r.theta_hi, angle_step))
        for (int p : stepped(r.phi_lo, r.phi_hi, angle_step)) out.push_back({a, t, wrap360(p)});
    return out;
  }

  std::vector<Candidate> around(const Candidate& c, int pos_radius, int pos_step, int ang_radius,
                                int ang_step) const {
    std::vector<Candidate> out;
    const int phi0 = *unwrap_phi(c.phi);
    for (int da : offsets(pos_radius, pos_step)) {
      int a = c.anchor_index + da;
      if (a < r.anchor_lo || a > r.anchor_hi) continue;
      for (int dt : offsets(ang_radius, ang_step)) {
        int t = c.theta + dt;
        if (t < r.theta_lo || t > r.theta_hi) continue;
        // Near the poles a degree of azimuth is a short arc, so the azimuth
        // radius grows to keep the same angular reach.
        double st = std::sin(deg2rad(t));
        int phi_radius = st * 180.0 <= ang_radius ? 180 : static_cast<int>(std::ceil(ang_radius / st));
        for (int dp : offsets(phi_radius, ang_step)) {
          int p = phi0 + dp;
          bool inside = phi_circular() ? true : (p >= r.phi_lo && p <= r.phi_hi);
          if (inside) out.push_back({a, t, wrap360(p)});
        }
      }
    }
    return out;
  }
};

}  // namespace detail

/// Coarse-to-fine grid search. The first level scans the whole range; each
/// later level scans its own step within the refinement radius of the
/// incumbent(s). Ties go to the smallest (anchor_index, theta, phi).
inline PrescriptionResult pyramid_search(const AnchorSegment& anchor,
                                         std::span<const SourceView> sources,
                                         const SearchConfig& cfg = {}) {
  cfg.validate();
  detail::RangeView rv{cfg.ranges.value_or(full_ranges(anchor))};
  rv.clamp_to(anchor);

  PrescriptionResult out;
  auto best = detail::run_pyramid<Candidate>(
      sources, cfg, [&] { return rv.grid(cfg.levels[0].position_step, cfg.levels[0].angle_step); },
      [&](const Candidate& c, std::size_t level) {
        const auto& L = cfg.levels[level];
        return rv.around(c, cfg.position_radius(level), L.position_step, cfg.angle_radius(level),
                         L.angle_step);
      },
      [&](const Candidate& c, std::span<const SourceView> s) {
        return score_candidate(c, anchor, s, cfg.scoring);
      },
      out);

  out.candidate = best.front().key;
  out.plane = candidate_plane(*out.candidate, anchor);
  out.score = score_plane(out.plane, sources, cfg.scoring, &out.segments);
  out.anchor = anchor;
  out.degenerate_zero_score = out.score == 0.0;
  return out;
}

/// True argmax over every finest-step candidate in the range, on the raw
/// heatmaps.
inline PrescriptionResult exhaustive_search(const AnchorSegment& anchor,
                                            std::span<const SourceView> sources,
                                            const SearchConfig& cfg = {}) {
  cfg.validate();
  detail::RangeView rv{cfg.ranges.value_or(full_ranges(anchor))};
  rv.clamp_to(anchor);
  const SearchRanges& r = rv.r;
  const auto& fine = cfg.levels.back();
  auto na = detail::stepped(r.anchor_lo, r.anchor_hi, fine.position_step);
  auto nt = detail::stepped(r.theta_lo, r.theta_hi, fine.angle_step);
  auto np = detail::stepped(r.phi_lo, r.phi_hi, fine.angle_step);
  double cardinality = static_cast<double>(na.size()) * nt.size() * np.size();
  if (cardinality > cfg.exhaustive_cap)
    throw SearchSpaceTooLarge("exhaustive search over " + std::to_string(cardinality) +
                              " candidates exceeds the cap of " + std::to_string(cfg.exhaustive_cap));
  const std::size_t n2 = nt.size(), n3 = np.size();
  auto key_at = [&](std::size_t i) {
    return Candidate{na[i / (n2 * n3)], nt[(i / n3) % n2], detail::wrap360(np[i % n3])};
  };
  auto best = detail::top_k<Candidate>(
      static_cast<std::size_t>(cardinality), key_at,
      [&](const Candidate& c) { return score_candidate(c, anchor, sources, cfg.scoring); },
      cfg.threads, 1);

  PrescriptionResult out;
  out.visited = static_cast<std::size_t>(cardinality);
  out.level_scores.push_back(best.front().score);
  out.candidate = best.front().key;
  out.plane = candidate_plane(*out.candidate, anchor);
  out.score = score_plane(out.plane, sources, cfg.scoring, &out.segments);
  out.anchor = anchor;
  out.degenerate_zero_score = out.score == 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Single-source case: the target is orthogonal to its only source view, so
// the search reduces to a line in that view.

/// Largest |offset| in pixels from the reference slice center.
inline int line_search_max_offset(const SlicePose& ref) {
  return static_cast<int>(std::ceil(0.5 * std::hypot(ref.cols() - 1.0, ref.rows() - 1.0)));
}

/// Line with unit normal at `angle` degrees, `offset` pixels from the center.
inline Line2D line_from_polar(const SlicePose& ref, double offset, double angle_deg) {
  double a = std::cos(deg2rad(angle_deg)), b = std::sin(deg2rad(angle_deg));
  Vec2 c = ref.center_pixel();
  return Line2D::canonical(a, b, -(a * c.x() + b * c.y()) - offset);
}

/// Plane containing `line` (pixels of `ref`) and orthogonal to the slice.
inline Plane3D lift_line(const SlicePose& ref, const Line2D& line) {
  Vec3 n = (line.a / ref.spacing_x()) * ref.row_dir() + (line.b / ref.spacing_y()) * ref.col_dir();
  return Plane3D(image_to_patient(ref, line.foot()), n);
}

/// 2D pyramid over (offset, in-plane angle) in the source's reference slice,
/// scored over every slice of the source. Ties go to the smallest
/// (offset_index, angle).
inline PrescriptionResult line_search_degenerate(const SourceView& source,
                                                 const SearchConfig& cfg = {}) {
  cfg.validate();
  const SlicePose& ref = source.reference();
  const int max_offset = line_search_max_offset(ref);
  const int index_hi = 2 * max_offset;
  auto line_of = [&](const LineCandidate& c) {
    return line_from_polar(ref, c.offset_index - max_offset, c.angle);
  };

  PrescriptionResult out;
  auto best = detail::run_pyramid<LineCandidate>(
      std::span<const SourceView>(&source, 1), cfg,
      [&] {
        std::vector<LineCandidate> keys;
        for (int i : detail::stepped(0, index_hi, cfg.levels[0].position_step))
          for (int t : detail::stepped(0, 179, cfg.levels[0].angle_step)) keys.push_back({i, t});
        return keys;
      },
      [&](const LineCandidate& c, std::size_t level) {
        const auto& L = cfg.levels[level];
        std::vector<LineCandidate> keys;
        for (int di : detail::offsets(cfg.position_radius(level), L.position_step))
          for (int dt : detail::offsets(cfg.angle_radius(level), L.angle_step)) {
            int i = c.offset_index + di, t = c.angle + dt;
            // (offset, angle) and (-offset, angle + 180) are the same line.
            if (t < 0 || t >= 180) {
              t = t < 0 ? t + 180 : t - 180;
              i = index_hi - i;
            }
            if (i >= 0 && i <= index_hi && t >= 0 && t < 180) keys.push_back({i, t});
          }
        return keys;
      },
      [&](const LineCandidate& c, std::span<const SourceView> s) {
        return score_plane(lift_line(ref, line_of(c)), s, cfg.scoring);
      },
      out);

  out.line_candidate = best.front().key;
  out.source_line = line_of(*out.line_candidate);
  out.plane = lift_line(ref, *out.source_line);
  out.score = score_plane(out.plane, std::span<const SourceView>(&source, 1), cfg.scoring, &out.segments);
  out.degenerate_zero_score = out.score == 0.0;
  return out;
}

// ---------------------------------------------------------------------------

/// Source views of `target` paired with that target's heatmap channel.
inline std::vector<SourceView> sources_for_target(const ExamManifest& exam, const LabelSet& labels,
                                                  const DependencyMap& deps,
                                                  const std::string& target) {
  const DependencyEntry* entry = deps.find(target);
  if (!entry) throw MissingView("target '" + target + "' is not in the dependency table");
  std::vector<SourceView> out;
  for (const auto& sid : entry->sources) {
    const View& v = exam.view(sid);
    SourceView sv{sid, v.slices, {}};
    for (std::size_t k = 0; k < v.slices.size(); ++k)
      sv.heatmaps.push_back(labels.at({sid, static_cast<int>(k), target}));
    out.push_back(std::move(sv));
  }
  return out;
}

/// Prescribes a target from its sources: the anchored pyramid search for two
/// or more sources, the line search for one.
inline PrescriptionResult prescribe(std::span<const SourceView> sources, const SearchConfig& cfg = {},
                                    std::optional<std::pair<std::size_t, std::size_t>> anchor_pair = {}) {
  if (sources.empty()) throw MissingView("no source views to prescribe from");
  if (sources.size() == 1) return line_search_degenerate(sources.front(), cfg);
  return pyramid_search(build_anchor(sources, anchor_pair), sources, cfg);
}

}  // namespace vplan
