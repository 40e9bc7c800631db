// owdsg command-line front end: generate, detect, osr, presets, plot.
//
// Exit status: 0 success, 1 validation error, 2 IO error, 3 internal error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <owdsg.hpp>

namespace fs = std::filesystem;
using namespace owdsg;

namespace {

enum Exit { ok = 0, validation = 1, io = 2, internal = 3 };

fs::path preset_dir() {
  if (const char* env = std::getenv("OWDSG_PRESET_DIR")) return env;
  return OWDSG_PRESET_DIR;
}

fs::path default_out_dir() {
  if (const char* env = std::getenv("OWDSG_OUT_DIR")) return env;
  return "owdsg_out";
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(preset_dir(), ec))
    if (e.path().extension() == ".json") names.push_back(e.path().stem().string());
  std::sort(names.begin(), names.end());
  return names;
}

// "exp1" expands to every preset named exp1_*; an exact name wins.
std::vector<std::string> expand_preset(const std::string& name) {
  auto names = preset_names();
  if (std::find(names.begin(), names.end(), name) != names.end()) return {name};
  std::vector<std::string> group;
  for (const auto& n : names)
    if (n.rfind(name + "_", 0) == 0) group.push_back(n);
  if (group.empty()) throw std::invalid_argument("unknown preset '" + name + "'");
  return group;
}

GeneratorConfig load_preset(const std::string& name) {
  return load_config(preset_dir() / (name + ".json"));
}

void warn_projection(const GeneratorConfig& c) {
  const auto n = total_clusters(c);
  if (c.allow_projection && !hypercube_fits(c.n_informative, n))
    std::cerr << "warning: " << n << " clusters do not fit a " << c.n_informative
              << "-dimensional hypercube; projecting from " << required_dims(n)
              << " dimensions. Consider increasing --class-sep.\n";
}

std::size_t jobs_or_default(std::size_t jobs) {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs f(i) for i in [0, n) on up to `jobs` threads, results in index order.
template <typename F>
auto parallel_map(std::size_t n, std::size_t jobs, F f) {
  using R = decltype(f(std::size_t{0}));
  std::vector<R> out(n);
  std::vector<std::future<void>> pending;
  std::size_t next = 0;
  auto worker = [&](std::size_t i) { out[i] = f(i); };
  while (next < n || !pending.empty()) {
    while (next < n && pending.size() < jobs) pending.push_back(std::async(std::launch::async, worker, next++));
    pending.front().get();
    pending.erase(pending.begin());
  }
  return out;
}

struct Family {
  std::string label;
  GeneratorConfig config;
  std::optional<StreamDataset> fixed;  // given stream file
};

std::vector<Family> resolve_inputs(const std::string& stream, const std::string& preset) {
  if (stream.empty() == preset.empty()) throw std::invalid_argument("give exactly one of --stream or --preset");
  std::vector<Family> families;
  if (!stream.empty()) {
    auto ds = load_stream(stream);
    families.push_back({stream_paths(stream).csv.stem().string(), ds.config, std::move(ds)});
  } else {
    for (const auto& name : expand_preset(preset)) families.push_back({name, load_preset(name), std::nullopt});
  }
  return families;
}

StreamEvents events_of(const std::string& label, const GroundTruth& gt) {
  return {label, gt.n_chunks, gt.drift_chunks, gt.novelty_chunks};
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  GeneratorConfig config;
  std::string config_file;
  std::string out;
  bool n_classes_given = false;
  bool weights_given = false;
};

int cmd_generate(GenerateArgs& a) {
  GeneratorConfig c = a.config;
  if (a.n_classes_given && !a.weights_given)
    c.weights.assign(c.n_classes, 1.0 / static_cast<double>(c.n_classes));
  if (!a.config_file.empty()) c = load_config(a.config_file, c);
  require_valid(c);
  warn_projection(c);
  auto ds = generate_stream(c);
  fs::path out = a.out.empty() ? default_out_dir() / "stream" : fs::path(a.out);
  auto paths = save_stream(ds, out);
  std::cout << paths.csv.string() << "\n" << paths.sidecar.string() << "\n";
  return Exit::ok;
}

struct DetectArgs {
  std::string stream, preset, out;
  std::vector<std::string> detectors = {"md3", "cddd", "ocdd"};
  std::size_t grid_size = 10;
  std::size_t seeds = 10;
  std::uint64_t first_seed = 0;
  std::size_t jobs = 0;
};

int cmd_detect(const DetectArgs& a) {
  std::vector<DetectorKind> kinds;
  for (const auto& d : a.detectors) kinds.push_back(parse_detector_kind(d));
  auto families = resolve_inputs(a.stream, a.preset);
  fs::path out = a.out.empty() ? default_out_dir() : fs::path(a.out);
  std::vector<DetectionFigureRow> figure;
  for (auto& fam : families) {
    // A given stream file is one replication; a preset is replayed per seed.
    const std::size_t n_seeds = fam.fixed ? 1 : a.seeds;
    warn_projection(fam.config);
    auto logs = parallel_map(n_seeds, jobs_or_default(a.jobs), [&](std::size_t i) {
      const std::uint64_t seed = fam.fixed ? fam.fixed->master_seed : a.first_seed + i;
      StreamDataset ds = fam.fixed ? *fam.fixed : generate_stream(fam.config, seed);
      std::vector<DetectionLog> per_kind;
      for (auto k : kinds) {
        auto grid = sensitivity_grid(k, a.grid_size);
        const std::uint64_t s[] = {seed};
        per_kind.push_back(run_sweep(ds, k, grid, s));
      }
      return std::pair{per_kind, ds.ground_truth};
    });
    // Order rows by detector, then parameter, then seed.
    DetectionLog merged;
    for (std::size_t k = 0; k < kinds.size(); ++k)
      for (std::size_t g = 0; g < a.grid_size; ++g)
        for (auto& [per_kind, gt] : logs) merged.replays.push_back(per_kind[k].replays[g]);
    const auto csv = detection_csv_text(merged);
    const auto events = events_text(events_of(fam.label, logs.front().second));
    write_file(out / (fam.label + ".detections.csv"), csv);
    write_file(out / (fam.label + ".events.json"), events);
    figure.push_back({parse_events(events), parse_detection_csv(csv)});
    std::cout << (out / (fam.label + ".detections.csv")).string() << "\n";
  }
  write_file(out / "detections.svg", detection_figure(figure));
  std::cout << (out / "detections.svg").string() << "\n";
  return Exit::ok;
}

struct OsrArgs {
  std::string stream, preset, out;
  std::vector<double> epsilons = {-0.5, 0.2, 0.9, 1.6, 2.3, 3.0};
  std::size_t seeds = 10;
  std::uint64_t first_seed = 0;
  std::vector<std::size_t> confusion_chunks;
  TrainingOptions training;
  std::size_t jobs = 0;
};

int cmd_osr(const OsrArgs& a) {
  if (a.epsilons.empty()) throw std::invalid_argument("epsilon list must not be empty");
  auto families = resolve_inputs(a.stream, a.preset);
  for (const auto& fam : families)
    if (fam.config.hide_label)
      throw std::invalid_argument("stream '" + fam.label +
                                  "' was generated with hide_label = true; open-set evaluation "
                                  "needs the individual novel-class labels to reveal them over time");
  fs::path out = a.out.empty() ? default_out_dir() : fs::path(a.out);
  const std::set<std::size_t> confusion(a.confusion_chunks.begin(), a.confusion_chunks.end());
  std::vector<OsrFigureRow> figure;
  for (auto& fam : families) {
    warn_projection(fam.config);
    auto runs = parallel_map(a.seeds, jobs_or_default(a.jobs), [&](std::size_t i) {
      const std::uint64_t seed = a.first_seed + i;
      StreamDataset ds = fam.fixed ? *fam.fixed : generate_stream(fam.config, seed);
      return std::pair{run_osr(ds, a.epsilons, seed, a.training, confusion), ds.ground_truth};
    });
    std::vector<ScoreRow> rows;
    for (const auto& [run, gt] : runs) {
      auto r = score_rows(run);
      rows.insert(rows.end(), r.begin(), r.end());
      for (std::size_t e = 0; e < run.epsilons.size(); ++e)
        for (const auto& [chunk, cm] : run.confusion[e])
          write_file(out / (fam.label + ".seed" + std::to_string(run.seed) + ".eps" +
                            format_double(run.epsilons[e]) + ".chunk" + std::to_string(chunk) +
                            ".confusion.csv"),
                     confusion_csv_text(cm));
    }
    const auto csv = score_csv_text(rows);
    const auto events = events_text(events_of(fam.label, runs.front().second));
    write_file(out / (fam.label + ".scores.csv"), csv);
    write_file(out / (fam.label + ".events.json"), events);
    figure.push_back({parse_events(events), parse_score_csv(csv)});
    std::cout << (out / (fam.label + ".scores.csv")).string() << "\n";
  }
  write_file(out / "osr.svg", osr_figure(figure));
  std::cout << (out / "osr.svg").string() << "\n";
  return Exit::ok;
}

int cmd_presets(const std::string& show) {
  if (show.empty()) {
    for (const auto& n : preset_names()) std::cout << n << "\n";
    return Exit::ok;
  }
  for (const auto& name : expand_preset(show)) {
    std::cout << "# " << name << "\n" << config_to_json(load_preset(name)).dump(2) << "\n";
  }
  return Exit::ok;
}

// Regenerates a figure from result files: each input prefix names
// <prefix>.detections.csv or <prefix>.scores.csv plus <prefix>.events.json.
int cmd_plot(const std::string& kind, const std::vector<std::string>& inputs, const std::string& out) {
  if (kind != "detect" && kind != "osr") throw std::invalid_argument("plot kind must be detect or osr");
  std::vector<DetectionFigureRow> det;
  std::vector<OsrFigureRow> osr;
  for (const auto& in : inputs) {
    auto events = parse_events(read_file(in + ".events.json"));
    if (kind == "detect")
      det.push_back({events, parse_detection_csv(read_file(in + ".detections.csv"))});
    else
      osr.push_back({events, parse_score_csv(read_file(in + ".scores.csv"))});
  }
  write_file(out, kind == "detect" ? detection_figure(det) : osr_figure(osr));
  std::cout << out << "\n";
  return Exit::ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-world data stream generator: synthetic streams with concept drift and "
               "emerging classes, detector sweeps and open-set evaluation."};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a stream (CSV + JSON sidecar)");
  auto& c = gen.config;
  g->add_option("--config", gen.config_file, "JSON config; its keys override flags");
  g->add_option("--out", gen.out, "Output prefix (writes PREFIX.csv and PREFIX.json)");
  g->add_option("--n-chunks", c.n_chunks)->capture_default_str();
  g->add_option("--chunk-size", c.chunk_size)->capture_default_str();
  g->add_option("--n-drifts", c.n_drifts)->capture_default_str();
  g->add_option("--n-novel", c.n_novel)->capture_default_str();
  g->add_option("--percentage-novel", c.percentage_novel)->capture_default_str();
  g->add_option("--even-gt", c.even_gt)->capture_default_str();
  g->add_option("--hide-label", c.hide_label)->capture_default_str();
  auto* ncls = g->add_option("--n-classes", c.n_classes)->capture_default_str();
  auto* wts = g->add_option("--weights", c.weights, "Class weights (default balanced)");
  g->add_option("--n-clusters-per-class", c.n_clusters_per_class)->capture_default_str();
  g->add_option("--class-sep", c.class_sep)->capture_default_str();
  g->add_option("--n-features", c.n_features)->capture_default_str();
  g->add_option("--n-informative", c.n_informative)->capture_default_str();
  g->add_option("--allow-projection", c.allow_projection)->capture_default_str();
  std::uint64_t seed_flag = 0;
  auto* seed_opt = g->add_option("--random-state,--seed", seed_flag, "Master seed");

  DetectArgs det;
  auto* d = app.add_subcommand("detect", "Sweep drift detectors over a stream or preset");
  d->add_option("--stream", det.stream, "Stream prefix written by generate");
  d->add_option("--preset", det.preset, "Preset name or group (e.g. exp1)");
  d->add_option("--detectors", det.detectors, "Detectors: md3, cddd, ocdd")->delimiter(',')->capture_default_str();
  d->add_option("--grid-size", det.grid_size)->check(CLI::PositiveNumber)->capture_default_str();
  d->add_option("--seeds", det.seeds, "Replications per preset stream")->check(CLI::PositiveNumber)->capture_default_str();
  d->add_option("--first-seed", det.first_seed)->capture_default_str();
  d->add_option("--out", det.out, "Output directory");
  d->add_option("--jobs", det.jobs, "Worker threads (0 = all cores)");

  OsrArgs osr;
  auto* o = app.add_subcommand("osr", "Open-set evaluation of an incremental MLP");
  o->add_option("--stream", osr.stream, "Stream prefix written by generate");
  o->add_option("--preset", osr.preset, "Preset name or group (e.g. exp2)");
  o->add_option("--epsilons", osr.epsilons, "Threshold multipliers")->delimiter(',')->capture_default_str();
  o->add_option("--seeds", osr.seeds, "Replications")->check(CLI::PositiveNumber)->capture_default_str();
  o->add_option("--first-seed", osr.first_seed)->capture_default_str();
  o->add_option("--confusion-chunks", osr.confusion_chunks, "Chunks to export confusion matrices for")
      ->delimiter(',');
  o->add_option("--epochs", osr.training.epochs)->capture_default_str();
  o->add_option("--learning-rate", osr.training.learning_rate)->capture_default_str();
  o->add_option("--hidden", osr.training.hidden)->check(CLI::PositiveNumber)->capture_default_str();
  o->add_option("--out", osr.out, "Output directory");
  o->add_option("--jobs", osr.jobs, "Worker threads (0 = all cores)");

  std::string show;
  auto* p = app.add_subcommand("presets", "List presets, or print one preset or group");
  p->add_option("name", show);

  std::string plot_kind, plot_out = "figure.svg";
  std::vector<std::string> plot_inputs;
  auto* pl = app.add_subcommand("plot", "Redraw a figure from result files");
  pl->add_option("kind", plot_kind, "detect or osr")->required();
  pl->add_option("--input", plot_inputs, "Result prefix (e.g. out/exp1_p10)")->required();
  pl->add_option("--out", plot_out)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return Exit::validation;
  }

  try {
    if (g->parsed()) {
      gen.n_classes_given = ncls->count() > 0;
      gen.weights_given = wts->count() > 0;
      if (seed_opt->count() > 0) c.random_state = seed_flag;
      return cmd_generate(gen);
    }
    if (d->parsed()) return cmd_detect(det);
    if (o->parsed()) return cmd_osr(osr);
    if (p->parsed()) return cmd_presets(show);
    if (pl->parsed()) return cmd_plot(plot_kind, plot_inputs, plot_out);
  } catch (const ValidationError& e) {
    for (auto err : e.errors()) std::cerr << "error: " << message(err) << "\n";
    return Exit::validation;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Exit::io;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Exit::io;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Exit::validation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return Exit::internal;
  }
  return Exit::internal;
}
