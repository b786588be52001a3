#pragma once

// Intersecting-line heatmap labels, the per-slice L2 loss, and exam-level
// label generation driven by a DependencyMap.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "vplan/error.hpp"
#include "vplan/exam.hpp"
#include "vplan/geom.hpp"

namespace vplan {

/// Row-major float raster, one value per pixel of the host slice.
struct Heatmap {
  int rows = 0;
  int cols = 0;
  std::vector<float> values;

  Heatmap() = default;
  Heatmap(int rows_, int cols_, float fill = 0.0f)
      : rows(rows_), cols(cols_), values(static_cast<std::size_t>(rows_) * cols_, fill) {}

  float& at(int x, int y) { return values[static_cast<std::size_t>(y) * cols + x]; }
  float at(int x, int y) const { return values[static_cast<std::size_t>(y) * cols + x]; }
  std::size_t size() const { return values.size(); }
  bool same_extent(const Heatmap& o) const { return rows == o.rows && cols == o.cols; }

  bool operator==(const Heatmap&) const = default;
};

/// Kernel width, defined as a fraction `alpha` of the target slice thickness
/// and converted to source-view pixels through the mean source spacing.
struct KernelConfig {
  double alpha = 0.5;
  double sigma_mm = 0.0;
  double sigma_pixels = 0.0;

  static KernelConfig resolve(const SlicePose& target, const SlicePose& source, double alpha) {
    if (!(alpha > 0.0)) throw InvariantViolation("kernel alpha must be positive");
    double mm = alpha * target.thickness();
    return {alpha, mm, mm / source.mean_spacing()};
  }
};

inline double sigma_for_target(const SlicePose& target, const SlicePose& source, double alpha) {
  return KernelConfig::resolve(target, source, alpha).sigma_pixels;
}

/// H(x, y) = exp(-(ax + by + c)^2 / (2 sigma^2 (a^2 + b^2))).
inline double line_response(const Line2D& line, double x, double y, double sigma) {
  double r = line.a * x + line.b * y + line.c;
  return std::exp(-(r * r) / (2.0 * sigma * sigma * (line.a * line.a + line.b * line.b)));
}

inline Heatmap render_heatmap(const Line2D& line, int cols, int rows, double sigma_pixels) {
  if (!(sigma_pixels > 0.0)) throw InvariantViolation("sigma must be positive");
  Heatmap h(rows, cols);
  for (int y = 0; y < rows; ++y)
    for (int x = 0; x < cols; ++x)
      h.at(x, y) = static_cast<float>(line_response(line, x, y, sigma_pixels));
  return h;
}

inline Heatmap render_heatmap(const Line2D& line, const SlicePose& pose, const KernelConfig& kernel) {
  return render_heatmap(line, pose.cols(), pose.rows(), kernel.sigma_pixels);
}

/// Separable Gaussian blur truncated at 3 sigma, edges clamped.
inline Heatmap gaussian_blur(const Heatmap& h, double sigma_pixels) {
  if (!(sigma_pixels > 0.0)) return h;
  const int r = static_cast<int>(std::ceil(3.0 * sigma_pixels));
  std::vector<double> w(2 * r + 1);
  double norm = 0.0;
  for (int d = -r; d <= r; ++d) norm += w[d + r] = std::exp(-0.5 * d * d / (sigma_pixels * sigma_pixels));
  for (auto& x : w) x /= norm;
  std::vector<double> tmp(h.size());
  for (int y = 0; y < h.rows; ++y)
    for (int x = 0; x < h.cols; ++x) {
      double s = 0.0;
      for (int d = -r; d <= r; ++d) s += w[d + r] * h.at(std::clamp(x + d, 0, h.cols - 1), y);
      tmp[static_cast<std::size_t>(y) * h.cols + x] = s;
    }
  Heatmap out(h.rows, h.cols);
  for (int y = 0; y < h.rows; ++y)
    for (int x = 0; x < h.cols; ++x) {
      double s = 0.0;
      for (int d = -r; d <= r; ++d)
        s += w[d + r] * tmp[static_cast<std::size_t>(std::clamp(y + d, 0, h.rows - 1)) * h.cols + x];
      out.at(x, y) = static_cast<float>(s);
    }
  return out;
}

/// (1/T)(1/|Omega|) sum_t sum_xy (H_t - Hhat_t)^2 over one slice's channels.
inline double l2_loss(std::span<const Heatmap> truth, std::span<const Heatmap> pred) {
  if (truth.size() != pred.size())
    throw ShapeMismatch("channel counts differ (" + std::to_string(truth.size()) + " vs " +
                        std::to_string(pred.size()) + ")");
  if (truth.empty()) throw ShapeMismatch("no channels to compare");
  const std::size_t pixels = truth.front().size();
  double total = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (!truth[t].same_extent(pred[t]) || !truth[t].same_extent(truth.front()))
      throw ShapeMismatch("channel " + std::to_string(t) + " extents differ");
    double channel = 0.0;
    for (std::size_t i = 0; i < pixels; ++i) {
      double d = static_cast<double>(truth[t].values[i]) - pred[t].values[i];
      channel += d * d;
    }
    total += channel;
  }
  return total / (static_cast<double>(truth.size()) * static_cast<double>(pixels));
}

struct LabelKey {
  std::string view;
  int slice = 0;
  std::string target;

  auto operator<=>(const LabelKey&) const = default;
};

/// Heatmaps keyed by (source view, slice, target). Channel order for a source
/// comes from DependencyMap::targets_of.
class LabelSet {
 public:
  void insert(LabelKey key, Heatmap h) { maps_.insert_or_assign(std::move(key), std::move(h)); }

  bool contains(const LabelKey& k) const { return maps_.count(k) != 0; }

  const Heatmap& at(const LabelKey& k) const {
    auto it = maps_.find(k);
    if (it == maps_.end())
      throw MissingView("no heatmap for view '" + k.view + "' slice " + std::to_string(k.slice) +
                        " target '" + k.target + "'");
    return it->second;
  }

  Heatmap& at(const LabelKey& k) { return const_cast<Heatmap&>(std::as_const(*this).at(k)); }

  /// Channels of one slice in the given target order.
  std::vector<Heatmap> slice_group(const std::string& view, int slice,
                                   const std::vector<std::string>& targets) const {
    std::vector<Heatmap> out;
    out.reserve(targets.size());
    for (const auto& t : targets) out.push_back(at({view, slice, t}));
    return out;
  }

  std::size_t size() const { return maps_.size(); }
  auto begin() const { return maps_.begin(); }
  auto end() const { return maps_.end(); }
  auto begin() { return maps_.begin(); }
  auto end() { return maps_.end(); }

  bool operator==(const LabelSet&) const = default;

 private:
  std::map<LabelKey, Heatmap> maps_;
};

namespace detail {

template <typename Job>
void run_parallel(std::size_t count, int threads, Job&& job) {
  int n = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (n == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(n);
  for (int w = 0; w < n; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += n) job(i);
    });
}

}  // namespace detail

/// Self-supervision labels for every (source slice, target) edge of `deps`.
/// Parallel rendering does not affect the result.
inline LabelSet gen_labels(const ExamManifest& exam, const DependencyMap& deps, double alpha,
                           int threads = 1) {
  check_dependencies(deps, exam, true);
  struct Job {
    LabelKey key;
    const SlicePose* source;
    const SlicePose* target;
  };
  std::vector<Job> jobs;
  for (const auto& source_id : deps.source_views()) {
    const View& source = exam.view(source_id);
    for (const auto& target_id : deps.targets_of(source_id)) {
      const View& target = exam.view(target_id);
      for (std::size_t k = 0; k < source.slices.size(); ++k)
        jobs.push_back({{source_id, static_cast<int>(k), target_id}, &source.slices[k],
                        &target.reference()});
    }
  }

  // Fail on the first degenerate edge before doing any rendering.
  std::vector<Line2D> lines;
  lines.reserve(jobs.size());
  for (const auto& j : jobs) {
    try {
      Line3D l = intersect_planes(pose_to_plane(*j.target), pose_to_plane(*j.source));
      lines.push_back(line3d_to_line2d(l, *j.source));
    } catch (const ParallelPlanes&) {
      throw ParallelPlanes("target '" + j.key.target + "' is parallel to source '" + j.key.view +
                           "' slice " + std::to_string(j.key.slice));
    }
  }

  std::vector<Heatmap> rendered(jobs.size());
  detail::run_parallel(jobs.size(), threads, [&](std::size_t i) {
    auto kernel = KernelConfig::resolve(*jobs[i].target, *jobs[i].source, alpha);
    rendered[i] = render_heatmap(lines[i], *jobs[i].source, kernel);
  });

  LabelSet out;
  for (std::size_t i = 0; i < jobs.size(); ++i) out.insert(jobs[i].key, std::move(rendered[i]));
  return out;
}

}  // namespace vplan
