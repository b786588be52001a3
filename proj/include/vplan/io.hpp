#pragma once

// File formats: exam manifests (JSON), HMAP heatmap rasters, prescribed
// planes, metrics reports, and PPM overlays.
//
// Manifest layout:
//
//   {
//     "exam_id": "exam-001",
//     "views": [
//       {"id": "axial", "role": "axial", "slices": [
//         {"image_position_patient": [x, y, z],   // center of pixel (0, 0), mm
//          "row_cosines": [x, y, z],               // along increasing column
//          "column_cosines": [x, y, z],            // along increasing row
//          "spacing_x": 1.34, "spacing_y": 1.34,   // mm per column / per row
//          "columns": 256, "rows": 192,
//          "slice_thickness": 6.0}]}],
//     "dependencies": [{"target": "p2C", "sources": ["axial"]}]   // optional
//   }

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "vplan/error.hpp"
#include "vplan/exam.hpp"
#include "vplan/geom.hpp"
#include "vplan/heatmap.hpp"
#include "vplan/metrics.hpp"
#include "vplan/prescribe.hpp"

namespace vplan {

using json = nlohmann::json;

inline constexpr double kStackNormalTolerance = 1e-6;

// ---------------------------------------------------------------------------
// Text helpers

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SchemaError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw SchemaError("write to '" + path.string() + "' failed");
}

namespace detail {

inline const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "." + key + ": missing");
  return *it;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path + ": expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(path + ": not finite");
  return v;
}

inline int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SchemaError(path + ": expected an integer");
  auto v = j.get<std::int64_t>();
  if (v < 0 || v > 1'000'000) throw SchemaError(path + ": out of range");
  return static_cast<int>(v);
}

inline std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path + ": expected a string");
  return j.get<std::string>();
}

inline const json& array(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path + ": expected an array");
  return j;
}

inline Vec3 vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw SchemaError(path + ": expected 3 numbers");
  return {number(j[0], path + "[0]"), number(j[1], path + "[1]"), number(j[2], path + "[2]")};
}

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
inline json to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

inline SlicePose parse_slice(const json& j, const std::string& path) {
  Vec3 origin = vec3(field(j, "image_position_patient", path), path + ".image_position_patient");
  Vec3 row = vec3(field(j, "row_cosines", path), path + ".row_cosines");
  Vec3 col = vec3(field(j, "column_cosines", path), path + ".column_cosines");
  double sx = number(field(j, "spacing_x", path), path + ".spacing_x");
  double sy = number(field(j, "spacing_y", path), path + ".spacing_y");
  int cols = integer(field(j, "columns", path), path + ".columns");
  int rows = integer(field(j, "rows", path), path + ".rows");
  double t = number(field(j, "slice_thickness", path), path + ".slice_thickness");
  try {
    return SlicePose(origin, row, col, sx, sy, cols, rows, t);
  } catch (const InvariantViolation& e) {
    throw InvariantViolation(path + ": " + e.what());
  }
}

inline json slice_json(const SlicePose& p) {
  return {{"image_position_patient", to_json(p.origin())},
          {"row_cosines", to_json(p.row_dir())},
          {"column_cosines", to_json(p.col_dir())},
          {"spacing_x", p.spacing_x()},
          {"spacing_y", p.spacing_y()},
          {"columns", p.cols()},
          {"rows", p.rows()},
          {"slice_thickness", p.thickness()}};
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(what + ": " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Manifest

inline ExamManifest parse_manifest(const std::string& text) {
  using namespace detail;
  const json root = parse_json(text, "manifest");
  ExamManifest m;
  m.exam_id = string(field(root, "exam_id", "$"), "$.exam_id");
  const json& views = array(field(root, "views", "$"), "$.views");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const std::string vp = "$.views[" + std::to_string(i) + "]";
    View v;
    v.id = string(field(views[i], "id", vp), vp + ".id");
    std::string role = string(field(views[i], "role", vp), vp + ".role");
    auto r = parse_role(role);
    if (!r) throw SchemaError(vp + ".role: unknown role '" + role + "'");
    v.role = *r;
    if (!ids.insert(v.id).second) throw InvariantViolation(vp + ": duplicate view id '" + v.id + "'");
    const json& slices = array(field(views[i], "slices", vp), vp + ".slices");
    if (slices.empty()) throw SchemaError(vp + ".slices: a view needs at least one slice");
    for (std::size_t k = 0; k < slices.size(); ++k)
      v.slices.push_back(parse_slice(slices[k], vp + ".slices[" + std::to_string(k) + "]"));
    const Vec3 n0 = v.slices.front().normal();
    for (std::size_t k = 1; k < v.slices.size(); ++k)
      if ((v.slices[k].normal() - n0).norm() > kStackNormalTolerance)
        throw InvariantViolation(vp + ".slices[" + std::to_string(k) +
                                 "]: normal differs from the first slice of view '" + v.id + "'");
    m.views.push_back(std::move(v));
  }
  if (auto it = root.find("dependencies"); it != root.end() && !it->is_null()) {
    const json& deps = array(*it, "$.dependencies");
    std::vector<DependencyEntry> entries;
    for (std::size_t i = 0; i < deps.size(); ++i) {
      const std::string dp = "$.dependencies[" + std::to_string(i) + "]";
      DependencyEntry e;
      e.target = string(field(deps[i], "target", dp), dp + ".target");
      const json& src = array(field(deps[i], "sources", dp), dp + ".sources");
      for (std::size_t k = 0; k < src.size(); ++k)
        e.sources.push_back(string(src[k], dp + ".sources[" + std::to_string(k) + "]"));
      entries.push_back(std::move(e));
    }
    m.dependencies = DependencyMap(std::move(entries));
    check_dependencies(*m.dependencies, m, false);
  }
  return m;
}

inline std::string serialize_manifest(const ExamManifest& m) {
  json root;
  root["exam_id"] = m.exam_id;
  root["views"] = json::array();
  for (const auto& v : m.views) {
    json slices = json::array();
    for (const auto& s : v.slices) slices.push_back(detail::slice_json(s));
    root["views"].push_back({{"id", v.id}, {"role", std::string(role_name(v.role))}, {"slices", slices}});
  }
  if (m.dependencies) {
    json deps = json::array();
    for (const auto& e : m.dependencies->entries()) deps.push_back({{"target", e.target}, {"sources", e.sources}});
    root["dependencies"] = deps;
  }
  return root.dump(2) + "\n";
}

inline ExamManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_text(path));
}

inline void save_manifest(const std::filesystem::path& path, const ExamManifest& m) {
  write_text(path, serialize_manifest(m));
}

// ---------------------------------------------------------------------------
// HMAP rasters
//
//   "HMAP" | version u16 | rows u32 | cols u32 | channels u32 | float32 payload
//
// Little-endian throughout; payload is channel-major, then row-major.

inline constexpr std::uint16_t kHeatmapVersion = 1;
inline constexpr std::size_t kHeatmapHeaderBytes = 18;

struct HeatmapFile {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<Heatmap> channels;

  bool operator==(const HeatmapFile&) const = default;
};

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::string& in, std::size_t at) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<T>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

}  // namespace detail

inline std::string encode_heatmaps(const HeatmapFile& f) {
  std::string out = "HMAP";
  detail::put_le<std::uint16_t>(out, kHeatmapVersion);
  detail::put_le<std::uint32_t>(out, f.rows);
  detail::put_le<std::uint32_t>(out, f.cols);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.channels.size()));
  out.reserve(out.size() + 4 * f.channels.size() * f.rows * f.cols);
  for (std::size_t c = 0; c < f.channels.size(); ++c) {
    const Heatmap& h = f.channels[c];
    if (h.rows != static_cast<int>(f.rows) || h.cols != static_cast<int>(f.cols))
      throw ShapeMismatch("channel " + std::to_string(c) + " extent differs from the file header");
    for (float v : h.values) {
      if (!std::isfinite(v)) throw NonFiniteValue("channel " + std::to_string(c) + " holds a non-finite value");
      detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    }
  }
  return out;
}

inline HeatmapFile decode_heatmaps(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "HMAP") != 0) throw BadMagic("missing HMAP magic");
  if (bytes.size() < kHeatmapHeaderBytes) throw TruncatedPayload("header is truncated");
  auto version = detail::get_le<std::uint16_t>(bytes, 4);
  if (version != kHeatmapVersion)
    throw SchemaError("unsupported HMAP version " + std::to_string(version));
  HeatmapFile f;
  f.rows = detail::get_le<std::uint32_t>(bytes, 6);
  f.cols = detail::get_le<std::uint32_t>(bytes, 10);
  const auto channels = detail::get_le<std::uint32_t>(bytes, 14);
  if (f.rows > (1u << 16) || f.cols > (1u << 16) || channels > (1u << 16))
    throw SchemaError("implausible raster extent or channel count");
  const std::uint64_t expected = 4ull * channels * f.rows * f.cols;
  const std::uint64_t actual = bytes.size() - kHeatmapHeaderBytes;
  if (actual < expected)
    throw TruncatedPayload("payload has " + std::to_string(actual) + " bytes, header implies " +
                           std::to_string(expected));
  if (actual > expected)
    throw SchemaError("payload has " + std::to_string(actual - expected) + " trailing bytes");
  std::size_t at = kHeatmapHeaderBytes;
  for (std::uint32_t c = 0; c < channels; ++c) {
    Heatmap h(static_cast<int>(f.rows), static_cast<int>(f.cols));
    for (auto& v : h.values) {
      v = std::bit_cast<float>(detail::get_le<std::uint32_t>(bytes, at));
      at += 4;
      if (!std::isfinite(v))
        throw NonFiniteValue("channel " + std::to_string(c) + " holds a non-finite value");
    }
    f.channels.push_back(std::move(h));
  }
  return f;
}

inline void write_heatmaps(const std::filesystem::path& path, const HeatmapFile& f) {
  write_text(path, encode_heatmaps(f));
}

inline HeatmapFile read_heatmaps(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  return decode_heatmaps({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

/// One file per source view: slice k, target t is channel k * T + t with
/// targets in dependency-table order.
inline HeatmapFile pack_view(const LabelSet& labels, const View& view, const DependencyMap& deps) {
  const auto targets = deps.targets_of(view.id);
  HeatmapFile f;
  f.rows = static_cast<std::uint32_t>(view.reference().rows());
  f.cols = static_cast<std::uint32_t>(view.reference().cols());
  for (std::size_t k = 0; k < view.slices.size(); ++k)
    for (const auto& t : targets) f.channels.push_back(labels.at({view.id, static_cast<int>(k), t}));
  return f;
}

inline void unpack_view(const HeatmapFile& f, const View& view, const DependencyMap& deps, LabelSet& out) {
  const auto targets = deps.targets_of(view.id);
  const std::size_t expected = view.slices.size() * targets.size();
  if (f.channels.size() != expected)
    throw ShapeMismatch("view '" + view.id + "' expects " + std::to_string(expected) + " channels (" +
                        std::to_string(view.slices.size()) + " slices x " + std::to_string(targets.size()) +
                        " targets), file has " + std::to_string(f.channels.size()));
  for (std::size_t k = 0; k < view.slices.size(); ++k) {
    const SlicePose& pose = view.slices[k];
    if (static_cast<int>(f.rows) != pose.rows() || static_cast<int>(f.cols) != pose.cols())
      throw ShapeMismatch("view '" + view.id + "' raster is " + std::to_string(f.cols) + "x" +
                          std::to_string(f.rows) + ", slice " + std::to_string(k) + " is " +
                          std::to_string(pose.cols()) + "x" + std::to_string(pose.rows()));
    for (std::size_t t = 0; t < targets.size(); ++t)
      out.insert({view.id, static_cast<int>(k), targets[t]}, f.channels[k * targets.size() + t]);
  }
}

inline std::filesystem::path heatmap_path(const std::filesystem::path& dir, const std::string& view) {
  return dir / (view + ".hmap");
}

inline void save_labels(const std::filesystem::path& dir, const ExamManifest& exam,
                        const DependencyMap& deps, const LabelSet& labels) {
  std::filesystem::create_directories(dir);
  for (const auto& source : deps.source_views())
    write_heatmaps(heatmap_path(dir, source), pack_view(labels, exam.view(source), deps));
}

inline LabelSet load_labels(const std::filesystem::path& dir, const ExamManifest& exam,
                            const DependencyMap& deps) {
  LabelSet out;
  for (const auto& source : deps.source_views()) {
    auto path = heatmap_path(dir, source);
    if (!std::filesystem::exists(path))
      throw MissingView("no heatmap file for view '" + source + "' at '" + path.string() + "'");
    unpack_view(read_heatmaps(path), exam.view(source), deps, out);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prescribed planes

struct PlaneRecord {
  std::string target;
  Plane3D plane{Vec3::Zero(), Vec3::UnitZ()};
  double score = 0.0;
  bool degenerate_zero_score = false;
  std::size_t visited = 0;
  std::vector<SourceSegment> segments;
};

struct PlaneSet {
  std::string exam_id;
  std::vector<PlaneRecord> planes;

  const PlaneRecord* find(const std::string& target) const {
    for (const auto& p : planes)
      if (p.target == target) return &p;
    return nullptr;
  }
};

inline PlaneRecord make_record(const std::string& target, const PrescriptionResult& r) {
  return {target, r.plane, r.score, r.degenerate_zero_score, r.visited, r.segments};
}

inline std::string serialize_planes(const PlaneSet& set) {
  json planes = json::array();
  for (const auto& p : set.planes) {
    json segs = json::array();
    for (const auto& s : p.segments)
      segs.push_back({{"view", s.view}, {"slice", s.slice},
                      {"start", detail::to_json(s.segment.start)}, {"end", detail::to_json(s.segment.end)}});
    planes.push_back({{"target", p.target},
                      {"point", detail::to_json(p.plane.point)},
                      {"normal", detail::to_json(p.plane.normal)},
                      {"score", p.score},
                      {"degenerate_zero_score", p.degenerate_zero_score},
                      {"visited", p.visited},
                      {"segments", segs}});
  }
  return json{{"exam_id", set.exam_id}, {"planes", planes}}.dump(2) + "\n";
}

inline PlaneSet parse_planes(const std::string& text) {
  using namespace detail;
  const json root = parse_json(text, "planes");
  PlaneSet set;
  set.exam_id = string(field(root, "exam_id", "$"), "$.exam_id");
  const json& planes = array(field(root, "planes", "$"), "$.planes");
  for (std::size_t i = 0; i < planes.size(); ++i) {
    const std::string pp = "$.planes[" + std::to_string(i) + "]";
    const json& p = planes[i];
    PlaneRecord r;
    r.target = string(field(p, "target", pp), pp + ".target");
    Vec3 point = vec3(field(p, "point", pp), pp + ".point");
    Vec3 normal = vec3(field(p, "normal", pp), pp + ".normal");
    try {
      r.plane = Plane3D(point, normal);
    } catch (const InvariantViolation& e) {
      throw InvariantViolation(pp + ": " + e.what());
    }
    if (auto it = p.find("score"); it != p.end()) r.score = number(*it, pp + ".score");
    if (auto it = p.find("degenerate_zero_score"); it != p.end()) {
      if (!it->is_boolean()) throw SchemaError(pp + ".degenerate_zero_score: expected a boolean");
      r.degenerate_zero_score = it->get<bool>();
    }
    set.planes.push_back(std::move(r));
  }
  return set;
}

// ---------------------------------------------------------------------------
// Reports

inline std::string report_json(const Report& r) {
  auto ms = [](const MeanStd& m) { return json{{"mean", m.mean}, {"std", m.std}}; };
  json cases = json::array();
  for (const auto& c : r.cases)
    cases.push_back({{"exam", c.exam}, {"target", c.target},
                     {"normal_deviation_deg", c.metrics.normal_deviation_deg},
                     {"point_to_plane_mm", c.metrics.point_to_plane_mm}});
  json targets = json::array();
  for (const auto& t : r.targets)
    targets.push_back({{"target", t.target}, {"n", t.n},
                       {"normal_deviation_deg", ms(t.normal_deviation_deg)},
                       {"point_to_plane_mm", ms(t.point_to_plane_mm)}});
  json root{{"cases", cases}, {"targets", targets},
            {"overall", {{"normal_deviation_deg", ms(r.overall_normal_deviation_deg)},
                         {"point_to_plane_mm", ms(r.overall_point_to_plane_mm)}}}};
  return root.dump(2) + "\n";
}

inline std::string report_csv(const Report& r) {
  std::ostringstream out;
  out.precision(17);
  out << "exam,target,normal_deviation_deg,point_to_plane_mm\n";
  for (const auto& c : r.cases)
    out << c.exam << ',' << c.target << ',' << c.metrics.normal_deviation_deg << ','
        << c.metrics.point_to_plane_mm << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Overlays

enum class OverlayLabel { Truth, Automatic };

struct OverlayLine {
  Line2D line;
  OverlayLabel label = OverlayLabel::Automatic;
};

/// 8-bit RGB raster. Grayscale background; truth lines green, automatic
/// lines red, pixels marked by both yellow.
struct Overlay {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> rgb;

  std::array<std::uint8_t, 3> at(int x, int y) const {
    std::size_t i = 3 * (static_cast<std::size_t>(y) * cols + x);
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }

  bool operator==(const Overlay&) const = default;
};

inline constexpr std::array<std::uint8_t, 3> kTruthColor{0, 255, 0};
inline constexpr std::array<std::uint8_t, 3> kAutomaticColor{255, 0, 0};
inline constexpr std::array<std::uint8_t, 3> kOverlapColor{255, 255, 0};

/// Pixels a line passes through, one per column or per row along its major
/// axis, rounded to the nearest pixel.
inline std::vector<std::pair<int, int>> rasterize_line(const Line2D& line, int cols, int rows) {
  std::vector<std::pair<int, int>> out;
  auto seg = clip_line(line, cols, rows);
  if (!seg) return out;
  if (std::abs(line.b) >= std::abs(line.a)) {
    double lo = std::min(seg->start.x(), seg->end.x()), hi = std::max(seg->start.x(), seg->end.x());
    for (int x = static_cast<int>(std::ceil(lo - kClipSlack)); x <= static_cast<int>(std::floor(hi + kClipSlack)); ++x) {
      int y = static_cast<int>(std::lround(-(line.a * x + line.c) / line.b));
      if (x >= 0 && x < cols && y >= 0 && y < rows) out.emplace_back(x, y);
    }
  } else {
    double lo = std::min(seg->start.y(), seg->end.y()), hi = std::max(seg->start.y(), seg->end.y());
    for (int y = static_cast<int>(std::ceil(lo - kClipSlack)); y <= static_cast<int>(std::floor(hi + kClipSlack)); ++y) {
      int x = static_cast<int>(std::lround(-(line.b * y + line.c) / line.a));
      if (x >= 0 && x < cols && y >= 0 && y < rows) out.emplace_back(x, y);
    }
  }
  return out;
}

/// `background` values are mapped from [0, 1] to gray levels; without one
/// the image starts black.
inline Overlay render_overlay(int cols, int rows, const std::vector<OverlayLine>& lines,
                              const Heatmap* background = nullptr) {
  if (cols < 1 || rows < 1) throw InvariantViolation("overlay extent must be positive");
  if (background && (background->cols != cols || background->rows != rows))
    throw ShapeMismatch("overlay background extent differs from the image");
  Overlay img{rows, cols, std::vector<std::uint8_t>(3 * static_cast<std::size_t>(rows) * cols, 0)};
  if (background)
    for (std::size_t i = 0; i < background->values.size(); ++i) {
      auto g = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp<double>(background->values[i], 0.0, 1.0)));
      img.rgb[3 * i] = img.rgb[3 * i + 1] = img.rgb[3 * i + 2] = g;
    }
  std::vector<std::uint8_t> marks(static_cast<std::size_t>(rows) * cols, 0);
  for (const auto& l : lines) {
    const std::uint8_t bit = l.label == OverlayLabel::Truth ? 1 : 2;
    for (auto [x, y] : rasterize_line(l.line, cols, rows)) marks[static_cast<std::size_t>(y) * cols + x] |= bit;
  }
  for (std::size_t i = 0; i < marks.size(); ++i) {
    if (!marks[i]) continue;
    const auto& c = marks[i] == 1 ? kTruthColor : marks[i] == 2 ? kAutomaticColor : kOverlapColor;
    std::copy(c.begin(), c.end(), img.rgb.begin() + 3 * i);
  }
  return img;
}

inline std::string encode_ppm(const Overlay& img) {
  std::string out = "P6\n" + std::to_string(img.cols) + " " + std::to_string(img.rows) + "\n255\n";
  out.append(img.rgb.begin(), img.rgb.end());
  return out;
}

inline void write_ppm(const std::filesystem::path& path, const Overlay& img) {
  write_text(path, encode_ppm(img));
}

}  // namespace vplan
