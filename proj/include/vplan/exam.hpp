#pragma once

// Exam-level containers: views with their slice poses, and the table of which
// source views each target plane is prescribed from.

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vplan/error.hpp"
#include "vplan/geom.hpp"

namespace vplan {

enum class ViewRole { Axial, P2C, P4C, PSA, C2, C3, C4, SAX };

inline constexpr std::string_view role_name(ViewRole r) {
  switch (r) {
    case ViewRole::Axial: return "axial";
    case ViewRole::P2C: return "p2C";
    case ViewRole::P4C: return "p4C";
    case ViewRole::PSA: return "pSA";
    case ViewRole::C2: return "2C";
    case ViewRole::C3: return "3C";
    case ViewRole::C4: return "4C";
    case ViewRole::SAX: return "SAX";
  }
  return "?";
}

inline std::optional<ViewRole> parse_role(std::string_view s) {
  for (auto r : {ViewRole::Axial, ViewRole::P2C, ViewRole::P4C, ViewRole::PSA,
                 ViewRole::C2, ViewRole::C3, ViewRole::C4, ViewRole::SAX})
    if (role_name(r) == s) return r;
  return std::nullopt;
}

struct View {
  std::string id;
  ViewRole role = ViewRole::Axial;
  std::vector<SlicePose> slices;

  /// Slice that stands for the whole stack when the view is a target or an
  /// anchor partner: the middle one, rounding up.
  std::size_t reference_index() const { return slices.size() / 2; }
  const SlicePose& reference() const { return slices.at(reference_index()); }
  Plane3D plane() const { return pose_to_plane(reference()); }

  bool operator==(const View&) const = default;
};

struct DependencyEntry {
  std::string target;
  std::vector<std::string> sources;

  bool operator==(const DependencyEntry&) const = default;
};

/// Ordered target -> sources table. Target order fixes heatmap channel order.
class DependencyMap {
 public:
  DependencyMap() = default;
  explicit DependencyMap(std::vector<DependencyEntry> entries) : entries_(std::move(entries)) {
    for (const auto& e : entries_) {
      if (e.sources.empty())
        throw InvariantViolation("target '" + e.target + "' has no source views");
      if (std::find(e.sources.begin(), e.sources.end(), e.target) != e.sources.end())
        throw InvariantViolation("target '" + e.target + "' depends on itself");
      if (std::count_if(entries_.begin(), entries_.end(),
                        [&](const auto& o) { return o.target == e.target; }) != 1)
        throw InvariantViolation("target '" + e.target + "' listed more than once");
    }
  }

  const std::vector<DependencyEntry>& entries() const { return entries_; }

  const DependencyEntry* find(std::string_view target) const {
    for (const auto& e : entries_)
      if (e.target == target) return &e;
    return nullptr;
  }

  /// Targets prescribed from `source`, in table order. These are the heatmap
  /// channels emitted for that source view.
  std::vector<std::string> targets_of(std::string_view source) const {
    std::vector<std::string> out;
    for (const auto& e : entries_)
      if (std::find(e.sources.begin(), e.sources.end(), source) != e.sources.end())
        out.push_back(e.target);
    return out;
  }

  /// Source views in order of first appearance.
  std::vector<std::string> source_views() const {
    std::vector<std::string> out;
    for (const auto& e : entries_)
      for (const auto& s : e.sources)
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    return out;
  }

  bool operator==(const DependencyMap&) const = default;

 private:
  std::vector<DependencyEntry> entries_;
};

enum class Protocol { Standard, Alternative };

/// Clinical prescription protocol: axial -> p2C -> pSA -> p4C -> standard
/// views. The alternative protocol swaps the p4C/pSA steps.
inline DependencyMap default_dependencies(Protocol protocol = Protocol::Standard) {
  std::vector<DependencyEntry> e;
  e.push_back({"p2C", {"axial"}});
  if (protocol == Protocol::Standard) {
    e.push_back({"pSA", {"p2C"}});
    e.push_back({"p4C", {"p2C", "pSA"}});
  } else {
    e.push_back({"pSA", {"p2C", "p4C"}});
    e.push_back({"p4C", {"p2C"}});
  }
  e.push_back({"2C", {"p4C", "pSA"}});
  e.push_back({"3C", {"p2C", "p4C", "pSA"}});
  e.push_back({"4C", {"p2C", "pSA"}});
  e.push_back({"SAX", {"p2C", "p4C"}});
  return DependencyMap(std::move(e));
}

struct ExamManifest {
  std::string exam_id;
  std::vector<View> views;
  std::optional<DependencyMap> dependencies;

  const View* find(std::string_view id) const {
    for (const auto& v : views)
      if (v.id == id) return &v;
    return nullptr;
  }

  const View& view(std::string_view id) const {
    if (const View* v = find(id)) return *v;
    throw MissingView("view '" + std::string(id) + "' is not in exam '" + exam_id + "'");
  }

  DependencyMap dependency_map() const {
    return dependencies ? *dependencies : default_dependencies();
  }

  bool operator==(const ExamManifest&) const = default;
};

/// Checks a dependency table against the views an exam actually contains.
inline void check_dependencies(const DependencyMap& deps, const ExamManifest& exam,
                               bool require_targets) {
  for (const auto& e : deps.entries()) {
    if (require_targets) exam.view(e.target);
    for (const auto& s : e.sources) {
      if (!exam.find(s))
        throw MissingView("target '" + e.target + "' depends on view '" + s +
                          "', which is not in exam '" + exam.exam_id + "'");
    }
  }
}

}  // namespace vplan
