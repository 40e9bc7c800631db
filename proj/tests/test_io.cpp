#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include <unistd.h>

#include <owdsg/io.hpp>
#include <owdsg/stream.hpp>
#include <owdsg/svg.hpp>

using namespace owdsg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("owdsg_io_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

GeneratorConfig tiny() {
  GeneratorConfig c;
  c.n_chunks = 12;
  c.chunk_size = 40;
  c.n_drifts = 1;
  c.n_novel = 2;
  c.n_features = 6;
  c.n_informative = 4;
  return c;
}

}  // namespace

TEST(Numbers, ShortestRoundTrip) {
  Rng rng(1);
  std::normal_distribution<double> n(0.0, 1e3);
  for (int i = 0; i < 20000; ++i) {
    const double v = n(rng) * std::pow(10.0, (i % 40) - 20);
    ASSERT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(-2.0), "-2");
  const double tiny_value = std::numeric_limits<double>::denorm_min();
  EXPECT_EQ(parse_double(format_double(tiny_value)), tiny_value);
  EXPECT_THROW(parse_double("1.5x"), FormatError);
  EXPECT_THROW(parse_double(""), FormatError);
  EXPECT_THROW(parse_int<int>("-"), FormatError);
}

TEST(Config, RoundTripsThroughJson) {
  auto c = tiny();
  c.weights = {0.3, 0.7};
  c.random_state = 17;
  auto back = config_from_json(nlohmann::json::parse(config_to_json(c).dump()));
  EXPECT_EQ(config_to_json(back).dump(), config_to_json(c).dump());
}

TEST(Config, RejectsUnknownKeysAndBadTypes) {
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"n_chunk": 3})")), FormatError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"n_chunks": "3"})")), FormatError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"n_chunks": -3})")), FormatError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse("[1]")), FormatError);
}

TEST(Config, PartialFileAppliesOnTopOfBase) {
  GeneratorConfig base;
  base.chunk_size = 77;
  auto c = config_from_json(nlohmann::json::parse(R"({"n_classes": 4, "random_state": null})"), base);
  EXPECT_EQ(c.chunk_size, 77u);
  EXPECT_EQ(c.weights, std::vector<double>(4, 0.25));
  EXPECT_FALSE(c.random_state);
}

TEST(Config, PresetsAreValid) {
  for (auto name : {"exp1_p10", "exp1_p20", "exp1_p50", "exp2_k1", "exp2_k3", "exp2_k5"}) {
    auto c = load_config(fs::path(OWDSG_PRESET_DIR) / (std::string(name) + ".json"));
    EXPECT_TRUE(validate(c).empty()) << name;
    EXPECT_EQ(c.n_chunks, 300u);
    EXPECT_EQ(c.chunk_size, 500u);
  }
  EXPECT_EQ(load_config(fs::path(OWDSG_PRESET_DIR) / "exp2_k5.json").n_clusters_per_class, 5u);
  EXPECT_EQ(load_config(fs::path(OWDSG_PRESET_DIR) / "exp1_p50.json").percentage_novel, 0.5);
}

TEST(Files, MissingFileIsIoError) {
  EXPECT_THROW(read_file("/nonexistent/owdsg/file.json"), IoError);
  EXPECT_THROW(load_config("/nonexistent/owdsg/file.json"), IoError);
}

TEST(StreamFiles, SaveLoadIsBitIdentical) {
  auto dir = scratch("stream");
  auto ds = generate_stream(tiny(), 21);
  auto paths = save_stream(ds, dir / "s");
  EXPECT_EQ(paths.csv, dir / "s.csv");
  auto back = load_stream(dir / "s.json");
  EXPECT_EQ(back.ground_truth, ds.ground_truth);
  EXPECT_EQ(back.master_seed, 21u);
  for (std::size_t t = 0; t < ds.chunks.size(); ++t) {
    EXPECT_EQ(back.chunks[t].features, ds.chunks[t].features);
    EXPECT_EQ(back.chunks[t].labels, ds.chunks[t].labels);
    EXPECT_EQ(back.chunks[t].chunk_index, t);
  }
  EXPECT_EQ(stream_csv_text(back), read_file(paths.csv));
  // The sidecar alone is enough to regenerate the stream.
  auto meta = parse_sidecar(read_file(paths.sidecar));
  EXPECT_EQ(stream_csv_text(generate_stream(meta.config, meta.master_seed)), read_file(paths.csv));
  fs::remove_all(dir);
}

TEST(StreamFiles, CsvLayout) {
  auto ds = generate_stream(tiny(), 2);
  auto text = stream_csv_text(ds);
  EXPECT_EQ(text.substr(0, text.find('\n')), "f0,f1,f2,f3,f4,f5,label,chunk");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 12 * 40 + 1);
}

TEST(StreamFiles, CorruptCsvRejected) {
  auto ds = generate_stream(tiny(), 2);
  auto text = stream_csv_text(ds);
  SidecarInfo meta{ds.config, ds.ground_truth, ds.master_seed};
  auto truncated = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
  EXPECT_THROW(parse_stream(truncated, meta), FormatError);
  EXPECT_THROW(parse_stream("a,b\n", meta), FormatError);
}

TEST(DetectionFiles, RoundTripIncludingEmptyReplays) {
  DetectionLog log;
  log.replays.push_back({DetectorKind::cddd, 0.95, 0, {3, 9, 120}});
  log.replays.push_back({DetectorKind::cddd, 0.95, 1, {}});
  log.replays.push_back({DetectorKind::md3, 0.1, 0, {}});
  log.replays.push_back({DetectorKind::md3, 0.1, 1, {}});
  log.replays.push_back({DetectorKind::ocdd, 0.3 + 1e-17 * 3, 4, {299}});
  auto text = detection_csv_text(log);
  auto back = parse_detection_csv(text);
  EXPECT_EQ(back.replays, log.replays);
  EXPECT_EQ(detection_csv_text(back), text);
  EXPECT_NE(text.find("cddd,0.95,1,\n"), std::string::npos);
  EXPECT_THROW(parse_detection_csv("detector,param\n"), FormatError);
  EXPECT_THROW(parse_detection_csv("detector,param,seed,chunk\nxyz,1,0,\n"), std::invalid_argument);
}

TEST(ScoreFiles, RoundTripWithUndefinedCells) {
  auto ds = generate_stream(tiny(), 3);
  const double eps[] = {-0.5, 1.6};
  auto rows = score_rows(run_osr(ds, eps, 3));
  ASSERT_EQ(rows.size(), 24u);
  auto text = score_csv_text(rows);
  EXPECT_NE(text.find("-0.5,3,0,,,,\n"), std::string::npos);
  auto back = parse_score_csv(text);
  EXPECT_EQ(score_csv_text(back), text);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].scores.inner, rows[i].scores.inner);
    EXPECT_EQ(back[i].scores.outer, rows[i].scores.outer);
  }
}

TEST(Confusion, Layout) {
  std::vector<std::vector<std::size_t>> cm = {{5, 1, 0}, {2, 7, 1}, {0, 3, 4}};
  EXPECT_EQ(confusion_csv_text(cm), "true\\pred,0,1,unknown\n0,5,1,0\n1,2,7,1\nunknown,0,3,4\n");
}

TEST(Events, RoundTrip) {
  StreamEvents e{"exp2_k1", 300, {150}, {60, 120, 180, 240}};
  auto back = parse_events(events_text(e));
  EXPECT_EQ(back.label, e.label);
  EXPECT_EQ(back.n_chunks, 300u);
  EXPECT_EQ(back.novelty_chunks, e.novelty_chunks);
  EXPECT_THROW(parse_events("{}"), FormatError);
}

TEST(Figures, DetectionFigureIsFunctionOfCsv) {
  DetectionLog log;
  log.replays.push_back({DetectorKind::cddd, 0.95, 0, {10, 50}});
  log.replays.push_back({DetectorKind::cddd, 0.6, 0, {}});
  log.replays.push_back({DetectorKind::md3, 0.1, 0, {75}});
  StreamEvents ev{"exp<1>&", 100, {50}, {25, 75}};
  auto svg = detection_figure({{ev, log}});
  EXPECT_EQ(svg, detection_figure({{parse_events(events_text(ev)), parse_detection_csv(detection_csv_text(log))}}));
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("exp&lt;1&gt;&amp;"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Figures, OsrFigureIsFunctionOfCsv) {
  auto ds = generate_stream(tiny(), 4);
  const double eps[] = {0.2, 3.0};
  auto rows = score_rows(run_osr(ds, eps, 4));
  StreamEvents ev{"tiny", 12, ds.ground_truth.drift_chunks, ds.ground_truth.novelty_chunks};
  auto svg = osr_figure({{ev, rows}});
  EXPECT_EQ(svg, osr_figure({{ev, parse_score_csv(score_csv_text(rows))}}));
  for (auto m : {"inner", "outer", "halfpoint", "overall"}) EXPECT_NE(svg.find(m), std::string::npos);
}
