#pragma once

// Text formats: stream CSV + JSON sidecar, detection logs, OSR score tables
// and confusion grids. Doubles are written in shortest round-trip form so a
// parse followed by a re-emit reproduces the input byte for byte.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "detect.hpp"
#include "metrics.hpp"
#include "osr.hpp"

namespace owdsg {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents (as opposed to an unreadable file).
class FormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::logic_error("double formatting failed");
  return std::string(buf, end);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size())
    throw FormatError("not a number: '" + std::string(s) + "'");
  return v;
}

template <typename Int>
Int parse_int(std::string_view s) {
  Int v{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size())
    throw FormatError("not an integer: '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, std::string_view contents) {
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed for " + p.string());
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json config_to_json(const GeneratorConfig& c) {
  nlohmann::ordered_json j;
  j["n_chunks"] = c.n_chunks;
  j["chunk_size"] = c.chunk_size;
  j["n_drifts"] = c.n_drifts;
  j["n_novel"] = c.n_novel;
  j["percentage_novel"] = c.percentage_novel;
  j["even_gt"] = c.even_gt;
  j["hide_label"] = c.hide_label;
  j["n_classes"] = c.n_classes;
  j["weights"] = c.weights;
  j["n_clusters_per_class"] = c.n_clusters_per_class;
  j["class_sep"] = c.class_sep;
  j["n_features"] = c.n_features;
  j["n_informative"] = c.n_informative;
  j["allow_projection"] = c.allow_projection;
  if (c.random_state)
    j["random_state"] = *c.random_state;
  else
    j["random_state"] = nullptr;
  return j;
}

// Applies the keys present in j on top of base. Unknown keys and wrongly
// typed values are rejected.
inline GeneratorConfig config_from_json(const nlohmann::json& j, GeneratorConfig base = {}) {
  if (!j.is_object()) throw FormatError("configuration must be a JSON object");
  bool weights_given = false;
  // nlohmann converts -3 to a huge size_t without complaint.
  auto count = [](const nlohmann::json& v) {
    if (!v.is_number_unsigned()) throw nlohmann::json::type_error::create(302, "expected a count", &v);
    return v.get<std::size_t>();
  };
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& key = it.key();
    const auto& v = it.value();
    try {
      if (key == "n_chunks") base.n_chunks = count(v);
      else if (key == "chunk_size") base.chunk_size = count(v);
      else if (key == "n_drifts") base.n_drifts = count(v);
      else if (key == "n_novel") base.n_novel = count(v);
      else if (key == "percentage_novel") base.percentage_novel = v.get<double>();
      else if (key == "even_gt") base.even_gt = v.get<bool>();
      else if (key == "hide_label") base.hide_label = v.get<bool>();
      else if (key == "n_classes") base.n_classes = count(v);
      else if (key == "weights") base.weights = v.get<std::vector<double>>(), weights_given = true;
      else if (key == "n_clusters_per_class") base.n_clusters_per_class = count(v);
      else if (key == "class_sep") base.class_sep = v.get<double>();
      else if (key == "n_features") base.n_features = count(v);
      else if (key == "n_informative") base.n_informative = count(v);
      else if (key == "allow_projection") base.allow_projection = v.get<bool>();
      else if (key == "random_state") {
        if (v.is_null()) base.random_state.reset();
        else base.random_state = count(v);
      } else {
        throw FormatError("unknown configuration key '" + key + "'");
      }
    } catch (const nlohmann::json::exception&) {
      throw FormatError("invalid value for configuration key '" + key + "'");
    }
  }
  // Class count changed without explicit weights: balanced classes.
  if (!weights_given && base.weights.size() != base.n_classes && base.n_classes > 0)
    base.weights.assign(base.n_classes, 1.0 / static_cast<double>(base.n_classes));
  return base;
}

inline GeneratorConfig load_config(const std::filesystem::path& p, GeneratorConfig base = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
  return config_from_json(j, std::move(base));
}

// ---------------------------------------------------------------------------
// Stream files
// ---------------------------------------------------------------------------

inline std::string sidecar_text(const StreamDataset& ds) {
  nlohmann::ordered_json j;
  j["format"] = "owdsg-stream";
  j["version"] = 1;
  j["config"] = config_to_json(ds.config);
  j["master_seed"] = ds.master_seed;
  j["ground_truth"] = {{"drift_chunks", ds.ground_truth.drift_chunks},
                       {"novelty_chunks", ds.ground_truth.novelty_chunks}};
  j["rows"] = ds.config.n_chunks * ds.config.chunk_size;
  return j.dump(2) + "\n";
}

struct SidecarInfo {
  GeneratorConfig config;
  GroundTruth ground_truth;
  std::uint64_t master_seed = 0;
};

inline SidecarInfo parse_sidecar(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    SidecarInfo s;
    s.config = config_from_json(j.at("config"));
    s.master_seed = j.at("master_seed").get<std::uint64_t>();
    s.ground_truth.n_chunks = s.config.n_chunks;
    s.ground_truth.drift_chunks = j.at("ground_truth").at("drift_chunks").get<std::vector<std::size_t>>();
    s.ground_truth.novelty_chunks =
        j.at("ground_truth").at("novelty_chunks").get<std::vector<std::size_t>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed stream sidecar: ") + e.what());
  }
}

inline std::string stream_csv_text(const StreamDataset& ds) {
  std::string out;
  const std::size_t nf = ds.config.n_features;
  for (std::size_t f = 0; f < nf; ++f) out += "f" + std::to_string(f) + ",";
  out += "label,chunk\n";
  out.reserve(ds.chunks.size() * ds.config.chunk_size * (nf * 20 + 8));
  char buf[64];
  for (const auto& chunk : ds.chunks) {
    const std::string chunk_id = std::to_string(chunk.chunk_index);
    for (Eigen::Index i = 0; i < chunk.features.rows(); ++i) {
      for (Eigen::Index f = 0; f < chunk.features.cols(); ++f) {
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, chunk.features(i, f));
        out.append(buf, end);
        out += ',';
      }
      out += std::to_string(chunk.labels[static_cast<std::size_t>(i)]);
      out += ',';
      out += chunk_id;
      out += '\n';
    }
  }
  return out;
}

// Rebuilds the chunks of a stream from its CSV given the sidecar metadata.
inline StreamDataset parse_stream(std::string_view csv, const SidecarInfo& meta) {
  StreamDataset ds;
  ds.config = meta.config;
  ds.ground_truth = meta.ground_truth;
  ds.master_seed = meta.master_seed;
  const std::size_t nf = meta.config.n_features, cs = meta.config.chunk_size;
  std::size_t pos = csv.find('\n');
  if (pos == std::string_view::npos) throw FormatError("stream CSV has no header");
  if (split(csv.substr(0, pos)).size() != nf + 2)
    throw FormatError("stream CSV header does not match n_features");
  ++pos;
  ds.chunks.resize(meta.config.n_chunks);
  for (std::size_t t = 0; t < ds.chunks.size(); ++t) {
    ds.chunks[t].chunk_index = t;
    ds.chunks[t].features.resize(static_cast<Eigen::Index>(cs), static_cast<Eigen::Index>(nf));
    ds.chunks[t].labels.reserve(cs);
  }
  std::size_t row = 0;
  while (pos < csv.size()) {
    auto end = csv.find('\n', pos);
    if (end == std::string_view::npos) end = csv.size();
    auto line = csv.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != nf + 2) throw FormatError("stream CSV row has the wrong number of cells");
    const auto t = parse_int<std::size_t>(cells[nf + 1]);
    if (t >= ds.chunks.size()) throw FormatError("chunk index outside the stream");
    auto& chunk = ds.chunks[t];
    if (chunk.labels.size() >= cs) throw FormatError("chunk holds more rows than chunk_size");
    const auto r = static_cast<Eigen::Index>(chunk.labels.size());
    for (std::size_t f = 0; f < nf; ++f)
      chunk.features(r, static_cast<Eigen::Index>(f)) = parse_double(cells[f]);
    chunk.labels.push_back(parse_int<int>(cells[nf]));
    ++row;
  }
  for (const auto& chunk : ds.chunks)
    if (chunk.labels.size() != cs) throw FormatError("chunk row count differs from chunk_size");
  return ds;
}

struct StreamPaths {
  std::filesystem::path csv;
  std::filesystem::path sidecar;
};

// "out/name" -> out/name.csv + out/name.json; a path ending in .csv or .json
// is accepted as well.
inline StreamPaths stream_paths(std::filesystem::path prefix) {
  if (prefix.extension() == ".csv" || prefix.extension() == ".json") prefix.replace_extension();
  auto csv = prefix, json = prefix;
  csv += ".csv";
  json += ".json";
  return {csv, json};
}

inline StreamPaths save_stream(const StreamDataset& ds, const std::filesystem::path& prefix) {
  auto paths = stream_paths(prefix);
  write_file(paths.csv, stream_csv_text(ds));
  write_file(paths.sidecar, sidecar_text(ds));
  return paths;
}

inline StreamDataset load_stream(const std::filesystem::path& prefix) {
  auto paths = stream_paths(prefix);
  auto meta = parse_sidecar(read_file(paths.sidecar));
  return parse_stream(read_file(paths.csv), meta);
}

// ---------------------------------------------------------------------------
// Detection logs: detector,param,seed,chunk. A replay without detections is
// kept as one row with an empty chunk cell.
// ---------------------------------------------------------------------------

inline std::string detection_csv_text(const DetectionLog& log) {
  std::string out = "detector,param,seed,chunk\n";
  for (const auto& r : log.replays) {
    const std::string prefix =
        std::string(name(r.kind)) + "," + format_double(r.param) + "," + std::to_string(r.seed) + ",";
    if (r.chunks.empty()) out += prefix + "\n";
    for (auto c : r.chunks) out += prefix + std::to_string(c) + "\n";
  }
  return out;
}

inline DetectionLog parse_detection_csv(std::string_view text) {
  DetectionLog log;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "detector,param,seed,chunk")
    throw FormatError("detection log header mismatch");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != 4) throw FormatError("detection log row needs 4 cells");
    DetectorKind kind = parse_detector_kind(cells[0]);
    double param = parse_double(cells[1]);
    auto seed = parse_int<std::uint64_t>(cells[2]);
    // Rows of one replay are contiguous.
    if (log.replays.empty() || log.replays.back().kind != kind ||
        format_double(log.replays.back().param) != format_double(param) ||
        log.replays.back().seed != seed || cells[3].empty())
      log.replays.push_back({kind, param, seed, {}});
    if (!cells[3].empty()) log.replays.back().chunks.push_back(parse_int<std::size_t>(cells[3]));
  }
  return log;
}

// ---------------------------------------------------------------------------
// OSR score tables: epsilon,seed,chunk,inner,outer,halfpoint,overall
// ---------------------------------------------------------------------------

struct ScoreRow {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::size_t chunk = 0;
  OSRScores scores;
};

inline std::vector<ScoreRow> score_rows(const OsrRun& run) {
  std::vector<ScoreRow> rows;
  for (std::size_t e = 0; e < run.epsilons.size(); ++e)
    for (std::size_t t = 0; t < run.scores[e].size(); ++t)
      rows.push_back({run.epsilons[e], run.seed, t, run.scores[e][t]});
  return rows;
}

inline std::string score_csv_text(const std::vector<ScoreRow>& rows) {
  auto cell = [](const Score& s) { return s ? format_double(*s) : std::string(); };
  std::string out = "epsilon,seed,chunk,inner,outer,halfpoint,overall\n";
  for (const auto& r : rows)
    out += format_double(r.epsilon) + "," + std::to_string(r.seed) + "," + std::to_string(r.chunk) +
           "," + cell(r.scores.inner) + "," + cell(r.scores.outer) + "," +
           cell(r.scores.halfpoint) + "," + cell(r.scores.overall) + "\n";
  return out;
}

inline std::vector<ScoreRow> parse_score_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "epsilon,seed,chunk,inner,outer,halfpoint,overall")
    throw FormatError("score table header mismatch");
  auto cell = [](std::string_view s) -> Score {
    if (s.empty()) return std::nullopt;
    return parse_double(s);
  };
  std::vector<ScoreRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto c = split(line);
    if (c.size() != 7) throw FormatError("score row needs 7 cells");
    rows.push_back({parse_double(c[0]), parse_int<std::uint64_t>(c[1]), parse_int<std::size_t>(c[2]),
                    OSRScores{cell(c[3]), cell(c[4]), cell(c[5]), cell(c[6])}});
  }
  return rows;
}

// Square grid with a header row of predicted labels; "unknown" is last.
inline std::string confusion_csv_text(const std::vector<std::vector<std::size_t>>& cm) {
  std::string out = "true\\pred";
  const std::size_t n = cm.size();
  for (std::size_t j = 0; j < n; ++j) out += "," + (j + 1 == n ? std::string("unknown") : std::to_string(j));
  out += "\n";
  for (std::size_t i = 0; i < n; ++i) {
    out += i + 1 == n ? std::string("unknown") : std::to_string(i);
    for (auto v : cm[i]) out += "," + std::to_string(v);
    out += "\n";
  }
  return out;
}

// Event metadata written next to detection logs and score tables so the
// figures can be regenerated from files alone.
struct StreamEvents {
  std::string label;
  std::size_t n_chunks = 0;
  std::vector<std::size_t> drift_chunks;
  std::vector<std::size_t> novelty_chunks;
};

inline std::string events_text(const StreamEvents& e) {
  nlohmann::ordered_json j;
  j["label"] = e.label;
  j["n_chunks"] = e.n_chunks;
  j["drift_chunks"] = e.drift_chunks;
  j["novelty_chunks"] = e.novelty_chunks;
  return j.dump(2) + "\n";
}

inline StreamEvents parse_events(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    return {j.at("label").get<std::string>(), j.at("n_chunks").get<std::size_t>(),
            j.at("drift_chunks").get<std::vector<std::size_t>>(),
            j.at("novelty_chunks").get<std::vector<std::size_t>>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed events file: ") + e.what());
  }
}

}  // namespace owdsg
