#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include <owdsg/detect.hpp>
#include <owdsg/io.hpp>
#include <owdsg/stream.hpp>

using namespace owdsg;

namespace {

GeneratorConfig load_preset(const std::string& name) {
  return load_config(std::string(OWDSG_PRESET_DIR) + "/" + name + ".json");
}

GeneratorConfig stationary() {
  auto c = load_preset("exp1_p10");
  c.n_drifts = 0;
  c.n_novel = 0;
  return c;
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double shift = 0.0) {
  Rng rng(seed);
  std::normal_distribution<double> n;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng) + shift;
  return m;
}

bool near_any(const std::vector<std::size_t>& hits, std::size_t event, std::size_t reach) {
  return std::any_of(hits.begin(), hits.end(), [&](std::size_t c) { return c >= event && c <= event + reach; });
}

}  // namespace

TEST(Grid, TenValuesMostSensitiveFirst) {
  auto cddd = sensitivity_grid(DetectorKind::cddd, 10);
  ASSERT_EQ(cddd.size(), 10u);
  EXPECT_DOUBLE_EQ(cddd.front(), 0.95);
  EXPECT_DOUBLE_EQ(cddd.back(), 0.6);
  EXPECT_TRUE(std::is_sorted(cddd.rbegin(), cddd.rend()));
  auto md3 = sensitivity_grid(DetectorKind::md3, 10);
  EXPECT_DOUBLE_EQ(md3.front(), 0.1);
  EXPECT_DOUBLE_EQ(md3.back(), 0.45);
  auto ocdd = sensitivity_grid(DetectorKind::ocdd, 10);
  EXPECT_DOUBLE_EQ(ocdd.front(), 0.3);
  EXPECT_DOUBLE_EQ(ocdd.back(), 2.5);
  EXPECT_TRUE(std::is_sorted(ocdd.begin(), ocdd.end()));
  for (std::size_t i = 1; i < 10; ++i) EXPECT_NEAR(ocdd[i] - ocdd[i - 1], 2.2 / 9, 1e-12);
  EXPECT_EQ(sensitivity_grid(DetectorKind::md3, 1), (std::vector<double>{0.1}));
  EXPECT_THROW(sensitivity_grid(DetectorKind::md3, 0), std::invalid_argument);
}

TEST(Kinds, ParseAndErrorListsSupported) {
  for (auto k : all_detector_kinds) EXPECT_EQ(parse_detector_kind(name(k)), k);
  try {
    parse_detector_kind("padd");
    FAIL();
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    for (auto k : all_detector_kinds) EXPECT_NE(msg.find(name(k)), std::string::npos);
  }
}

TEST(Centroid, IdenticalChunksNeverDetect) {
  CentroidDistanceDetector d(0.95);
  Matrix x = gaussian(50, 3, 1);
  d.start(x, {});
  for (int i = 0; i < 30; ++i) EXPECT_FALSE(d.step(x));
  EXPECT_EQ(d.last_statistic(), 0.0);
}

TEST(Centroid, EmptyChunkThrows) {
  CentroidDistanceDetector d(0.9);
  EXPECT_THROW(d.start(Matrix(0, 3), {}), std::invalid_argument);
  d.start(gaussian(5, 3, 1), {});
  EXPECT_THROW(d.step(Matrix(0, 3)), std::invalid_argument);
}

TEST(Centroid, FiresOnJumpAfterQuietHistory) {
  CentroidDistanceDetector d(0.6);
  d.start(gaussian(400, 4, 0), {});
  std::size_t quiet_hits = 0;
  for (std::uint64_t s = 1; s < 25; ++s) quiet_hits += d.step(gaussian(400, 4, s));
  EXPECT_LE(quiet_hits, 1u);
  EXPECT_TRUE(d.step(gaussian(400, 4, 99, 2.0)));
}

TEST(Centroid, StationaryStreamRarelyFiresAtLeastSensitiveValue) {
  std::size_t quiet = 0, loud_total = 0, quiet_total = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto ds = generate_stream(stationary(), s);
    CentroidDistanceDetector strict(0.6), loose(0.95);
    auto a = replay(ds, strict), b = replay(ds, loose);
    quiet += a.size() <= 1;
    quiet_total += a.size();
    loud_total += b.size();
  }
  EXPECT_GE(quiet, 9u);
  EXPECT_GE(loud_total, quiet_total);
}

TEST(Centroid, RespondsToEveryEventAtHalfNovelty) {
  auto cfg = load_preset("exp1_p50");
  std::size_t good = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto ds = generate_stream(cfg, s);
    CentroidDistanceDetector d(0.95);
    auto hits = replay(ds, d);
    bool all = true;
    for (auto e : ds.ground_truth.drift_chunks) all = all && near_any(hits, e, 10);
    for (auto e : ds.ground_truth.novelty_chunks) all = all && near_any(hits, e, 10);
    good += all;
  }
  EXPECT_GE(good, 7u);
}

TEST(LinearMarginTest, SeparatesSeparableData) {
  Matrix x(200, 2);
  Vector y(200);
  Rng rng(3);
  std::normal_distribution<double> n(0.0, 0.3);
  for (int i = 0; i < 200; ++i) {
    const double sign = i % 2 ? 1.0 : -1.0;
    x(i, 0) = 2.0 * sign + n(rng);
    x(i, 1) = n(rng);
    y(i) = sign;
  }
  auto m = LinearMargin::fit(x, y, 0.01, 500);
  const Vector f = m.decision(x);
  int correct = 0;
  for (int i = 0; i < 200; ++i) correct += (f(i) > 0) == (y(i) > 0);
  EXPECT_GE(correct, 198);
  EXPECT_LT(m.margin_density(x), 0.2);
}

TEST(MarginDensity, SingleClassFirstChunkThrows) {
  MarginDensityDetector d(0.1);
  std::vector<int> labels(10, 0);
  EXPECT_THROW(d.start(gaussian(10, 2, 0), labels), std::invalid_argument);
}

TEST(MarginDensity, EqualDensityNeverDetects) {
  MarginDensityDetector d(1e-9);
  Matrix x = gaussian(100, 3, 2);
  std::vector<int> labels(100);
  for (int i = 0; i < 100; ++i) labels[i] = x(i, 0) > 0;
  d.start(x, labels);
  for (int i = 0; i < 10; ++i) EXPECT_FALSE(d.step(x));
}

TEST(MarginDensity, LeastSensitiveIgnoresLowNovelty) {
  auto cfg = load_preset("exp1_p10");
  std::size_t silent = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto ds = generate_stream(cfg, s);
    MarginDensityDetector d(0.45);
    auto hits = replay(ds, d);
    bool any = false;
    for (auto e : ds.ground_truth.novelty_chunks) any = any || near_any(hits, e, 0);
    silent += !any;
  }
  EXPECT_GT(silent, 5u);
}

TEST(OneClass, InDistributionChunksStayQuiet) {
  OneClassDetector d(0.3);
  d.start(gaussian(1000, 4, 0), {});
  EXPECT_NEAR(d.model().training_outlier_rate, 0.05, 0.002);
  double rate_sum = 0;
  for (std::uint64_t s = 1; s <= 40; ++s) {
    EXPECT_FALSE(d.step(gaussian(1000, 4, s)));
    rate_sum += d.last_statistic();
  }
  EXPECT_NEAR(rate_sum / 40, 0.05, 0.01);
}

TEST(OneClass, TotalOutliersDetectedAtEveryThresholdBelowOne) {
  for (double sens : sensitivity_grid(DetectorKind::ocdd, 10)) {
    if (sens >= 1.0) continue;
    OneClassDetector d(sens);
    d.start(gaussian(500, 3, 0), {});
    EXPECT_TRUE(d.step(gaussian(500, 3, 1, 100.0))) << sens;
    EXPECT_EQ(d.last_statistic(), 1.0);
  }
  OneClassDetector above(1.0);
  above.start(gaussian(500, 3, 0), {});
  EXPECT_FALSE(above.step(gaussian(500, 3, 1, 100.0)));
}

TEST(OneClass, QuantileRadius) {
  // Distances 0..100 in one dimension after whitening keep their order, so
  // exactly the top 5% lie beyond the interpolated quantile.
  Matrix x(101, 1);
  for (int i = 0; i < 101; ++i) x(i, 0) = i;
  auto m = OneClassModel::fit(x);
  EXPECT_NEAR(m.training_outlier_rate, 5.0 / 101.0, 0.011);
}

// Replays one stream across every grid value: stricter thresholds must yield
// subsets of the detections of looser ones.
class Nested : public ::testing::TestWithParam<DetectorKind> {};

TEST_P(Nested, DetectionSetsShrinkWithStrictness) {
  for (const char* preset : {"exp1_p10", "exp1_p50"})
    for (std::uint64_t s = 0; s < 3; ++s) {
      auto ds = generate_stream(load_preset(preset), s);
      std::vector<std::set<std::size_t>> sets;
      for (double p : sensitivity_grid(GetParam(), 10)) {
        auto d = make_detector(GetParam(), p);
        auto hits = replay(ds, *d);
        ASSERT_TRUE(std::is_sorted(hits.begin(), hits.end()));
        ASSERT_EQ(std::adjacent_find(hits.begin(), hits.end()), hits.end());
        sets.emplace_back(hits.begin(), hits.end());
      }
      for (std::size_t i = 1; i < sets.size(); ++i)
        EXPECT_TRUE(std::includes(sets[i - 1].begin(), sets[i - 1].end(), sets[i].begin(), sets[i].end()))
            << preset << " seed " << s << " grid " << i;
    }
}

TEST_P(Nested, LaterLabelsAreNeverRead) {
  auto ds = generate_stream(load_preset("exp1_p20"), 1);
  auto scrambled = ds;
  for (std::size_t t = 1; t < scrambled.chunks.size(); ++t)
    std::fill(scrambled.chunks[t].labels.begin(), scrambled.chunks[t].labels.end(), 7);
  const double p = sensitivity_grid(GetParam(), 10).front();
  auto a = make_detector(GetParam(), p), b = make_detector(GetParam(), p);
  EXPECT_EQ(replay(ds, *a), replay(scrambled, *b));
}

INSTANTIATE_TEST_SUITE_P(AllDetectors, Nested,
                         ::testing::Values(DetectorKind::cddd, DetectorKind::md3, DetectorKind::ocdd),
                         [](const auto& info) { return std::string(name(info.param)); });

TEST(Sweep, SingleChunkStreamGivesEmptyLog) {
  auto c = stationary();
  c.n_chunks = 1;
  auto ds = generate_stream(c, 0);
  const std::uint64_t seeds[] = {0, 1};
  auto grid = sensitivity_grid(DetectorKind::cddd, 10);
  auto log = run_sweep(ds, DetectorKind::cddd, grid, seeds);
  EXPECT_EQ(log.detection_count(), 0u);
}

TEST(Sweep, ReplayRowCountForExperimentOne) {
  auto cfg = load_preset("exp1_p50");
  cfg.n_chunks = 40;
  std::size_t rows = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto ds = generate_stream(cfg, s);
    const std::uint64_t seed[] = {s};
    for (auto k : all_detector_kinds) {
      auto grid = sensitivity_grid(k, 10);
      rows += run_sweep(ds, k, grid, seed).replays.size();
    }
  }
  EXPECT_EQ(rows, 300u);
}

TEST(Sweep, StationaryLogMuchSparserThanEventLog) {
  std::size_t quiet = 0, busy = 0;
  const std::uint64_t seeds[] = {0};
  for (std::uint64_t s = 0; s < 3; ++s) {
    auto a = generate_stream(stationary(), s);
    auto b = generate_stream(load_preset("exp1_p50"), s);
    for (auto k : all_detector_kinds) {
      auto grid = sensitivity_grid(k, 10);
      quiet += run_sweep(a, k, grid, seeds).detection_count();
      busy += run_sweep(b, k, grid, seeds).detection_count();
    }
  }
  EXPECT_LT(2 * quiet, busy);
}

TEST(Sweep, EmptyGridRejected) {
  auto ds = generate_stream(stationary(), 0);
  std::vector<double> grid;
  std::vector<std::uint64_t> seeds{0};
  EXPECT_THROW(run_sweep(ds, DetectorKind::md3, grid, seeds), std::invalid_argument);
}
