#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"

namespace owdsg {

enum class DetectorKind { cddd, md3, ocdd };

inline constexpr DetectorKind all_detector_kinds[] = {DetectorKind::md3, DetectorKind::cddd,
                                                      DetectorKind::ocdd};

inline std::string_view name(DetectorKind k) {
  switch (k) {
    case DetectorKind::cddd: return "cddd";
    case DetectorKind::md3: return "md3";
    case DetectorKind::ocdd: return "ocdd";
  }
  return "?";
}

inline DetectorKind parse_detector_kind(std::string_view s) {
  for (auto k : all_detector_kinds)
    if (name(k) == s) return k;
  throw std::invalid_argument("unknown detector '" + std::string(s) +
                              "' (supported: md3, cddd, ocdd)");
}

struct ParameterRange {
  double lo;
  double hi;
  bool higher_is_more_sensitive;
};

inline ParameterRange parameter_range(DetectorKind k) {
  switch (k) {
    case DetectorKind::cddd: return {0.6, 0.95, true};
    case DetectorKind::md3: return {0.1, 0.45, false};
    case DetectorKind::ocdd: return {0.3, 2.5, false};
  }
  throw std::logic_error("unhandled detector kind");
}

// n evenly spaced values over the detector's range, most sensitive first.
inline std::vector<double> sensitivity_grid(DetectorKind k, std::size_t n) {
  if (n == 0) throw std::invalid_argument("grid must not be empty");
  auto r = parameter_range(k);
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    g[i] = r.higher_is_more_sensitive ? r.hi - f * (r.hi - r.lo) : r.lo + f * (r.hi - r.lo);
  }
  return g;
}

// Chunk-level unsupervised detector. Only start() sees labels; every later
// chunk arrives as features alone. Each step rebuilds the reference from the
// chunk it just processed, so the internal state never depends on the
// threshold.
class ChunkDetector {
 public:
  virtual ~ChunkDetector() = default;
  virtual void start(const Matrix& features, std::span<const int> labels) = 0;
  virtual bool step(const Matrix& features) = 0;
  // Statistic the last step() compared against its threshold.
  double last_statistic() const { return last_statistic_; }

 protected:
  double last_statistic_ = 0.0;
};

namespace detail {
inline void require_rows(const Matrix& m) {
  if (m.rows() == 0) throw std::invalid_argument("empty chunk");
}
}  // namespace detail

// Centroid distance: distance between consecutive chunk centroids against the
// largest distance seen over a trailing window.
class CentroidDistanceDetector final : public ChunkDetector {
 public:
  explicit CentroidDistanceDetector(double percent, std::size_t window = 20)
      : percent_(percent), window_(window) {
    if (window == 0) throw std::invalid_argument("window must be positive");
  }

  void start(const Matrix& features, std::span<const int>) override {
    detail::require_rows(features);
    reference_ = features.colwise().mean().transpose();
    history_.clear();
  }

  bool step(const Matrix& features) override {
    detail::require_rows(features);
    Vector centroid = features.colwise().mean().transpose();
    const double d = (centroid - reference_).norm();
    bool detected = false;
    if (!history_.empty()) {
      const double m = *std::max_element(history_.begin(), history_.end());
      detected = d * percent_ > m;
    }
    last_statistic_ = d;
    history_.push_back(d);
    if (history_.size() > window_) history_.pop_front();
    reference_ = std::move(centroid);
    return detected;
  }

 private:
  double percent_;
  std::size_t window_;
  Vector reference_;
  std::deque<double> history_;
};

// Linear hinge-loss classifier trained by full-batch subgradient descent on
// lambda/2 |w|^2 + mean(max(0, 1 - y (w.x + b))).
struct LinearMargin {
  Vector w;
  double b = 0.0;

  Vector decision(const Matrix& x) const { return (x * w).array() + b; }

  double margin_density(const Matrix& x) const {
    const Vector f = decision(x);
    return static_cast<double>((f.array().abs() <= 1.0).count()) / static_cast<double>(x.rows());
  }

  static LinearMargin fit(const Matrix& x, const Vector& y, double lambda, std::size_t iterations) {
    LinearMargin m;
    m.w = Vector::Zero(x.cols());
    const double n = static_cast<double>(x.rows());
    for (std::size_t t = 1; t <= iterations; ++t) {
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const Vector margins = y.array() * m.decision(x).array();
      const Vector active = (margins.array() < 1.0).cast<double>() * y.array();
      const Vector grad_w = lambda * m.w - x.transpose() * active / n;
      const double grad_b = -active.sum() / n;
      m.w -= eta * grad_w;
      m.b -= eta * grad_b;
    }
    return m;
  }
};

// Margin density: share of rows inside the unit margin band of a classifier
// trained on the labeled first chunk, compared with the previous chunk.
class MarginDensityDetector final : public ChunkDetector {
 public:
  explicit MarginDensityDetector(double sigma, double lambda = 1.0, std::size_t iterations = 200)
      : sigma_(sigma), lambda_(lambda), iterations_(iterations) {}

  void start(const Matrix& features, std::span<const int> labels) override {
    detail::require_rows(features);
    if (labels.size() != static_cast<std::size_t>(features.rows()))
      throw std::invalid_argument("first chunk needs one label per row");
    // Positive class: the most frequent label (lowest label on ties).
    std::vector<int> sorted(labels.begin(), labels.end());
    std::sort(sorted.begin(), sorted.end());
    int best = sorted.front();
    std::size_t best_count = 0, distinct = 0;
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      ++distinct;
      if (j - i > best_count) best_count = j - i, best = sorted[i];
      i = j;
    }
    if (distinct < 2) throw std::invalid_argument("cannot fit margin model on a single class");
    Vector y(features.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i)
      y(i) = labels[static_cast<std::size_t>(i)] == best ? 1.0 : -1.0;
    model_ = LinearMargin::fit(features, y, lambda_, iterations_);
    baseline_.reset();
  }

  bool step(const Matrix& features) override {
    detail::require_rows(features);
    const double md = model_.margin_density(features);
    bool detected = false;
    if (baseline_) {
      last_statistic_ = std::abs(md - *baseline_);
      detected = last_statistic_ > sigma_;
    }
    baseline_ = md;
    return detected;
  }

  const LinearMargin& model() const { return model_; }

 private:
  double sigma_;
  double lambda_;
  std::size_t iterations_;
  LinearMargin model_;
  std::optional<double> baseline_;
};

// Ellipsoidal one-class model: centroid, inverse covariance and the radius
// holding `quantile` of the training rows.
struct OneClassModel {
  Vector mean;
  Matrix precision;
  double radius = 0.0;
  double training_outlier_rate = 0.0;

  Vector distances(const Matrix& x) const {
    Matrix centered = x.rowwise() - mean.transpose();
    return ((centered * precision).array() * centered.array()).rowwise().sum().sqrt();
  }

  double outlier_rate(const Matrix& x) const {
    return static_cast<double>((distances(x).array() > radius).count()) /
           static_cast<double>(x.rows());
  }

  static OneClassModel fit(const Matrix& x, double quantile = 0.95) {
    OneClassModel m;
    const auto n = x.rows();
    const auto d = x.cols();
    m.mean = x.colwise().mean().transpose();
    Matrix centered = x.rowwise() - m.mean.transpose();
    Matrix cov = n > 1 ? Matrix(centered.transpose() * centered / static_cast<double>(n - 1))
                       : Matrix(Matrix::Zero(d, d));
    const double ridge = 1e-9 * (cov.trace() / static_cast<double>(d) + 1e-12);
    cov.diagonal().array() += ridge;
    m.precision = cov.ldlt().solve(Matrix::Identity(d, d));
    Vector dist = m.distances(x);
    std::vector<double> sorted(dist.data(), dist.data() + dist.size());
    std::sort(sorted.begin(), sorted.end());
    // Linear interpolation between order statistics.
    const double pos = quantile * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    m.radius = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    m.training_outlier_rate = m.outlier_rate(x);
    return m;
  }
};

// One-class drift: outlier rate of a chunk under the model of the previous
// chunk must exceed both the sensitivity and twice the training rate.
class OneClassDetector final : public ChunkDetector {
 public:
  explicit OneClassDetector(double sensitivity, double quantile = 0.95)
      : sensitivity_(sensitivity), quantile_(quantile) {}

  void start(const Matrix& features, std::span<const int>) override {
    detail::require_rows(features);
    model_ = OneClassModel::fit(features, quantile_);
  }

  bool step(const Matrix& features) override {
    detail::require_rows(features);
    const double rho = model_.outlier_rate(features);
    last_statistic_ = rho;
    const bool detected = rho > sensitivity_ && rho > 2.0 * model_.training_outlier_rate;
    model_ = OneClassModel::fit(features, quantile_);
    return detected;
  }

  const OneClassModel& model() const { return model_; }

 private:
  double sensitivity_;
  double quantile_;
  OneClassModel model_;
};

inline std::unique_ptr<ChunkDetector> make_detector(DetectorKind kind, double param) {
  switch (kind) {
    case DetectorKind::cddd: return std::make_unique<CentroidDistanceDetector>(param);
    case DetectorKind::md3: return std::make_unique<MarginDensityDetector>(param);
    case DetectorKind::ocdd: return std::make_unique<OneClassDetector>(param);
  }
  throw std::logic_error("unhandled detector kind");
}

// Detection chunks of one replay.
struct DetectionRecord {
  DetectorKind kind;
  double param;
  std::uint64_t seed;
  std::vector<std::size_t> chunks;

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

struct DetectionLog {
  std::vector<DetectionRecord> replays;

  std::size_t detection_count() const {
    std::size_t n = 0;
    for (const auto& r : replays) n += r.chunks.size();
    return n;
  }

  friend bool operator==(const DetectionLog&, const DetectionLog&) = default;
};

inline std::vector<std::size_t> replay(const StreamDataset& stream, ChunkDetector& detector) {
  std::vector<std::size_t> hits;
  if (stream.chunks.empty()) return hits;
  detector.start(stream.chunks.front().features, stream.chunks.front().labels);
  for (std::size_t t = 1; t < stream.chunks.size(); ++t)
    if (detector.step(stream.chunks[t].features)) hits.push_back(t);
  return hits;
}

// One replay per (parameter, seed). seeds label the replications the stream
// belongs to; the detectors themselves are deterministic.
inline DetectionLog run_sweep(const StreamDataset& stream, DetectorKind kind,
                              std::span<const double> grid, std::span<const std::uint64_t> seeds) {
  if (grid.empty()) throw std::invalid_argument("grid must not be empty");
  DetectionLog log;
  for (double p : grid) {
    for (auto seed : seeds) {
      auto det = make_detector(kind, p);
      log.replays.push_back({kind, p, seed, replay(stream, *det)});
    }
  }
  return log;
}

}  // namespace owdsg
