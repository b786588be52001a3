// vplan: phantom -> gen-labels -> prescribe -> evaluate, plus the label loss.
//
// Exit codes: 0 success, 2 invalid input, 3 degenerate geometry, 1 anything
// else.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vplan/vplan.hpp"

namespace fs = std::filesystem;
using namespace vplan;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

int to_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw SchemaError("bad " + what + " '" + s + "'");
}

// "15,5,1" or "15:15,5:5,1:1" (position:angle per level).
std::vector<PyramidLevel> parse_steps(const std::string& text) {
  std::vector<PyramidLevel> levels;
  for (const auto& level : split(text, ',')) {
    auto parts = split(level, ':');
    if (parts.empty() || parts.size() > 2) throw SchemaError("bad pyramid level '" + level + "'");
    int p = to_int(parts[0], "pyramid step");
    int a = parts.size() == 2 ? to_int(parts[1], "pyramid step") : p;
    levels.push_back({p, a});
  }
  return levels;
}

DependencyMap exam_dependencies(const ExamManifest& exam, const std::string& protocol) {
  if (exam.dependencies) return *exam.dependencies;
  return default_dependencies(protocol == "alternative" ? Protocol::Alternative : Protocol::Standard);
}

struct Options {
  // shared
  std::string manifest;
  std::string out;
  std::string protocol = "standard";
  int threads = 1;
  std::uint64_t seed = 0;
  double noise_std = 0.0;
  int noise_blur = 0;
  double alpha = 0.5;
  // prescribe
  std::string heatmaps;
  std::string targets;
  std::string overlays;
  std::string steps = "15,5,1";
  SamplingMode sampling = SamplingMode::Bilinear;
  Aggregation aggregation = Aggregation::Sum;
  std::vector<std::string> anchor_pairs;
  double smoothing = SearchConfig{}.coarse_smoothing;
  int passes = SearchConfig{}.passes;
  int beam = SearchConfig{}.beam;
  // evaluate
  std::string planes;
  std::string csv;
  std::string format = "json";
  // loss
  std::string truth;
  std::string pred;
};

int cmd_phantom(const Options& o) {
  PhantomConfig cfg;
  cfg.seed = o.seed;
  cfg.alpha = o.alpha;
  cfg.protocol = o.protocol == "alternative" ? Protocol::Alternative : Protocol::Standard;
  cfg.render_labels = false;
  PhantomExam ex = generate(cfg);
  ex.manifest.dependencies = ex.dependencies;
  fs::create_directories(o.out);
  save_manifest(fs::path(o.out) / "manifest.json", ex.manifest);
  std::cout << "wrote " << (fs::path(o.out) / "manifest.json").string() << " (exam " << ex.manifest.exam_id
            << ", " << ex.attempts << " draw(s))\n";
  return 0;
}

int cmd_gen_labels(const Options& o) {
  ExamManifest exam = load_manifest(o.manifest);
  DependencyMap deps = exam_dependencies(exam, o.protocol);
  LabelSet labels = gen_labels(exam, deps, o.alpha, o.threads);
  NoiseConfig noise{o.noise_std, o.noise_blur};
  if (noise.active()) labels = corrupt(labels, noise, o.seed);
  save_labels(o.out, exam, deps, labels);
  for (const auto& source : deps.source_views())
    std::cout << source << ": " << exam.view(source).slices.size() << " slice(s) x "
              << deps.targets_of(source).size() << " target(s)\n";
  return 0;
}

void write_overlays(const fs::path& dir, const ExamManifest& exam, const std::string& target,
                    const std::vector<SourceView>& sources, const PrescriptionResult& r) {
  fs::create_directories(dir);
  const View* truth = exam.find(target);
  for (const auto& src : sources) {
    const SlicePose& pose = src.reference();
    std::vector<OverlayLine> lines;
    if (truth)
      if (auto l = plane_trace(truth->plane(), pose)) lines.push_back({*l, OverlayLabel::Truth});
    if (auto l = plane_trace(r.plane, pose)) lines.push_back({*l, OverlayLabel::Automatic});
    auto img = render_overlay(pose.cols(), pose.rows(), lines, &src.heatmaps[src.reference_index()]);
    write_ppm(dir / (target + "_" + src.id + ".ppm"), img);
  }
}

int cmd_prescribe(const Options& o) {
  ExamManifest exam = load_manifest(o.manifest);
  DependencyMap deps = exam_dependencies(exam, o.protocol);
  std::vector<std::string> targets = o.targets.empty() ? standard_targets() : split(o.targets, ',');
  for (const auto& t : targets)
    if (!deps.find(t)) throw MissingView("target '" + t + "' is not in the dependency table");

  std::map<std::string, std::pair<std::string, std::string>> pairs;
  for (const auto& spec : o.anchor_pairs) {
    auto eq = spec.find('=');
    auto views = eq == std::string::npos ? std::vector<std::string>{} : split(spec.substr(eq + 1), ',');
    if (views.size() != 2) throw SchemaError("anchor pair must look like TARGET=VIEW,VIEW, got '" + spec + "'");
    pairs[spec.substr(0, eq)] = {views[0], views[1]};
  }

  SearchConfig cfg;
  cfg.levels = parse_steps(o.steps);
  cfg.scoring = {o.sampling, o.aggregation};
  cfg.threads = o.threads;
  cfg.coarse_smoothing = o.smoothing;
  cfg.passes = o.passes;
  cfg.beam = o.beam;
  cfg.validate();

  LabelSet labels = load_labels(o.heatmaps, exam, deps);
  PlaneSet out{exam.exam_id, {}};
  for (const auto& t : targets) {
    auto sources = sources_for_target(exam, labels, deps, t);
    std::optional<std::pair<std::size_t, std::size_t>> pair;
    if (auto it = pairs.find(t); it != pairs.end()) {
      auto index = [&](const std::string& id) {
        for (std::size_t i = 0; i < sources.size(); ++i)
          if (sources[i].id == id) return i;
        throw MissingView("anchor view '" + id + "' is not a source of '" + t + "'");
      };
      pair = std::pair{index(it->second.first), index(it->second.second)};
    }
    PrescriptionResult r = prescribe(sources, cfg, pair);
    out.planes.push_back(make_record(t, r));
    std::cout << t << ": score " << r.score << (r.degenerate_zero_score ? " (zero score)" : "")
              << ", " << r.visited << " candidates\n";
    if (!o.overlays.empty()) write_overlays(o.overlays, exam, t, sources, r);
  }
  if (auto parent = fs::path(o.out).parent_path(); !parent.empty()) fs::create_directories(parent);
  write_text(o.out, serialize_planes(out));
  return 0;
}

int cmd_evaluate(const Options& o) {
  PlaneSet planes = parse_planes(read_text(o.planes));
  ExamManifest exam = load_manifest(o.manifest);
  if (planes.exam_id != exam.exam_id)
    throw InvariantViolation("planes are for exam '" + planes.exam_id + "' but the manifest is '" +
                             exam.exam_id + "'");
  std::vector<CaseMetrics> cases;
  for (const auto& p : planes.planes)
    cases.push_back({exam.exam_id, p.target, evaluate_plane(exam.view(p.target).reference(), p.plane)});
  Report report = aggregate(cases);
  const std::string text = o.format == "csv" ? report_csv(report) : report_json(report);
  if (o.out.empty()) std::cout << text;
  else write_text(o.out, text);
  if (!o.csv.empty()) write_text(o.csv, report_csv(report));
  for (const auto& t : report.targets)
    std::cerr << t.target << ": " << t.normal_deviation_deg.mean << " deg, " << t.point_to_plane_mm.mean << " mm\n";
  return 0;
}

// Per file, the mean squared difference over every channel and pixel. Files
// hold equal-sized slice groups, so this is also the mean over their slices.
// The total is the mean over files.
int cmd_loss(const Options& o) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(o.truth))
    if (entry.path().extension() == ".hmap") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw MissingView("no .hmap files in '" + o.truth + "'");
  double total = 0.0;
  for (const auto& f : files) {
    auto pred_path = fs::path(o.pred) / f.filename();
    if (!fs::exists(pred_path)) throw MissingView("no prediction file '" + pred_path.string() + "'");
    HeatmapFile truth = read_heatmaps(f), pred = read_heatmaps(pred_path);
    double loss = l2_loss(truth.channels, pred.channels);
    total += loss;
    std::printf("%s %.17g\n", f.stem().string().c_str(), loss);
  }
  std::printf("mean %.17g\n", total / files.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cardiac view-plane prescription from intersecting-line heatmaps"};
  app.require_subcommand(1);
  Options o;

  auto* phantom = app.add_subcommand("phantom", "write a synthetic exam manifest with known planes");
  phantom->add_option("--out", o.out, "output directory")->required();
  phantom->add_option("--seed", o.seed, "random seed");
  phantom->add_option("--protocol", o.protocol, "localizer ordering")
      ->check(CLI::IsMember({"standard", "alternative"}));

  auto* labels = app.add_subcommand("gen-labels", "render heatmap labels, one HMAP file per source view");
  labels->add_option("--manifest", o.manifest, "exam manifest")->required()->check(CLI::ExistingFile);
  labels->add_option("--out", o.out, "output directory")->required();
  labels->add_option("--alpha", o.alpha, "kernel width as a fraction of target slice thickness")
      ->check(CLI::PositiveNumber);
  labels->add_option("--threads", o.threads, "render threads")->check(CLI::PositiveNumber);
  labels->add_option("--noise-std", o.noise_std, "additive Gaussian noise on the labels")
      ->check(CLI::NonNegativeNumber);
  labels->add_option("--noise-blur", o.noise_blur, "box blur half-width after noise, pixels")
      ->check(CLI::NonNegativeNumber);
  labels->add_option("--seed", o.seed, "noise seed");
  labels->add_option("--protocol", o.protocol, "dependency table when the manifest has none")
      ->check(CLI::IsMember({"standard", "alternative"}));

  auto* pres = app.add_subcommand("prescribe", "search target planes from heatmaps");
  pres->add_option("--manifest", o.manifest, "exam manifest")->required()->check(CLI::ExistingFile);
  pres->add_option("--heatmaps", o.heatmaps, "directory of HMAP files")->required()->check(CLI::ExistingDirectory);
  pres->add_option("--out", o.out, "planes JSON")->required();
  pres->add_option("--targets", o.targets, "comma-separated targets (default 2C,3C,4C,SAX)");
  pres->add_option("--overlays", o.overlays, "directory for PPM overlays");
  pres->add_option("--steps", o.steps, "pyramid steps, e.g. 15,5,1 or 15:15,5:5,1:1");
  pres->add_option("--sampling", o.sampling, "line sampling")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, SamplingMode>{{"bilinear", SamplingMode::Bilinear}, {"nearest", SamplingMode::Nearest}}));
  pres->add_option("--aggregation", o.aggregation, "per-line aggregation")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, Aggregation>{{"sum", Aggregation::Sum}, {"mean", Aggregation::Mean}}));
  pres->add_option("--anchor-pair", o.anchor_pairs, "anchor views per target, e.g. 3C=p2C,pSA");
  pres->add_option("--smoothing", o.smoothing, "coarse-level blur, as a fraction of the level step")
      ->check(CLI::NonNegativeNumber);
  pres->add_option("--passes", o.passes, "max re-centred scans per refinement level")->check(CLI::PositiveNumber);
  pres->add_option("--beam", o.beam, "incumbents kept between levels")->check(CLI::PositiveNumber);
  pres->add_option("--threads", o.threads, "scoring threads")->check(CLI::PositiveNumber);
  pres->add_option("--protocol", o.protocol, "dependency table when the manifest has none")
      ->check(CLI::IsMember({"standard", "alternative"}));

  auto* eval = app.add_subcommand("evaluate", "compare prescribed planes with the manifest's planes");
  eval->add_option("--planes", o.planes, "planes JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--manifest", o.manifest, "ground-truth manifest")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", o.out, "report path (stdout if omitted)");
  eval->add_option("--format", o.format, "report format")->check(CLI::IsMember({"json", "csv"}));
  eval->add_option("--csv", o.csv, "also write a CSV report here");

  auto* loss = app.add_subcommand("loss", "mean squared difference between two heatmap directories");
  loss->add_option("--truth", o.truth, "reference HMAP directory")->required()->check(CLI::ExistingDirectory);
  loss->add_option("--pred", o.pred, "predicted HMAP directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*phantom) return cmd_phantom(o);
    if (*labels) return cmd_gen_labels(o);
    if (*pres) return cmd_prescribe(o);
    if (*eval) return cmd_evaluate(o);
    if (*loss) return cmd_loss(o);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const GeometryError& e) {
    std::cerr << "geometry error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
