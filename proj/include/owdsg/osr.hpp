#pragma once

#include <cmath>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "core.hpp"
#include "metrics.hpp"

namespace owdsg {

struct MlpGradients {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
};

// Single-hidden-layer rectifier network with a fixed output width. Only the
// first active_outputs logits take part in the softmax and in training.
class MlpModel {
 public:
  MlpModel(std::size_t n_inputs, std::size_t n_outputs, std::size_t hidden, std::uint64_t seed)
      : w1_(static_cast<Eigen::Index>(n_inputs), static_cast<Eigen::Index>(hidden)),
        b1_(static_cast<Eigen::Index>(hidden)),
        w2_(static_cast<Eigen::Index>(hidden), static_cast<Eigen::Index>(n_outputs)),
        b2_(static_cast<Eigen::Index>(n_outputs)) {
    if (n_inputs == 0 || n_outputs == 0 || hidden == 0)
      throw std::invalid_argument("network dimensions must be positive");
    auto rng = make_rng(seed, SeedPurpose::model_init);
    auto fill = [&rng](auto& m, double fan_in) {
      std::uniform_real_distribution<double> u(-1.0 / std::sqrt(fan_in), 1.0 / std::sqrt(fan_in));
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    };
    fill(w1_, static_cast<double>(n_inputs));
    fill(b1_, static_cast<double>(n_inputs));
    fill(w2_, static_cast<double>(hidden));
    fill(b2_, static_cast<double>(hidden));
  }

  std::size_t n_inputs() const { return static_cast<std::size_t>(w1_.rows()); }
  std::size_t n_outputs() const { return static_cast<std::size_t>(w2_.cols()); }
  std::size_t hidden() const { return static_cast<std::size_t>(w1_.cols()); }
  std::size_t active_outputs() const { return active_; }
  bool fitted() const { return fitted_; }

  // Output width never shrinks and never exceeds n_outputs.
  void activate(std::size_t n) { active_ = std::max(active_, std::min(n, n_outputs())); }
  void mark_fitted() { fitted_ = true; }

  Matrix hidden_activations(const Matrix& x) const {
    Matrix h = x * w1_;
    h.rowwise() += b1_.transpose();
    return h.cwiseMax(0.0);
  }

  Matrix logits(const Matrix& x) const { return logits_from_hidden(hidden_activations(x)); }

  // Row-wise softmax over the active logits.
  Matrix supports(const Matrix& x) const { return softmax(logits(x)); }

  static Matrix softmax(const Matrix& logits) {
    Matrix s = logits.colwise() - logits.rowwise().maxCoeff();
    s = s.array().exp();
    s.array().colwise() /= s.rowwise().sum().array();
    return s;
  }

  // Mean softmax cross-entropy of the active outputs; labels must be active.
  double loss(const Matrix& x, std::span<const int> y) const {
    const Matrix p = supports(x);
    double total = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      total -= std::log(std::max(p(i, label_at(y, i)), 1e-300));
    return total / static_cast<double>(p.rows());
  }

  MlpGradients gradients(const Matrix& x, std::span<const int> y) const {
    const auto n = x.rows();
    const auto a = static_cast<Eigen::Index>(active_);
    Matrix pre = x * w1_;
    pre.rowwise() += b1_.transpose();
    const Matrix h = pre.cwiseMax(0.0);
    Matrix delta = softmax(logits_from_hidden(h));
    for (Eigen::Index i = 0; i < n; ++i) delta(i, label_at(y, i)) -= 1.0;
    delta /= static_cast<double>(n);

    MlpGradients g{Matrix::Zero(w1_.rows(), w1_.cols()), Vector::Zero(b1_.size()),
                   Matrix::Zero(w2_.rows(), w2_.cols()), Vector::Zero(b2_.size())};
    g.w2.leftCols(a) = h.transpose() * delta;
    g.b2.head(a) = delta.colwise().sum().transpose();
    Matrix dh = delta * w2_.leftCols(a).transpose();
    dh = dh.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    g.w1 = x.transpose() * dh;
    g.b1 = dh.colwise().sum().transpose();
    return g;
  }

  void apply(const MlpGradients& g, double learning_rate) {
    w1_ -= learning_rate * g.w1;
    b1_ -= learning_rate * g.b1;
    w2_ -= learning_rate * g.w2;
    b2_ -= learning_rate * g.b2;
  }

  // Flat parameter view in the order w1, b1, w2, b2 (finite-difference checks).
  std::size_t parameter_count() const {
    return static_cast<std::size_t>(w1_.size() + b1_.size() + w2_.size() + b2_.size());
  }
  double& parameter(std::size_t i) {
    for (auto block : {std::span<double>(w1_.data(), static_cast<std::size_t>(w1_.size())),
                       std::span<double>(b1_.data(), static_cast<std::size_t>(b1_.size())),
                       std::span<double>(w2_.data(), static_cast<std::size_t>(w2_.size())),
                       std::span<double>(b2_.data(), static_cast<std::size_t>(b2_.size()))}) {
      if (i < block.size()) return block[i];
      i -= block.size();
    }
    throw std::out_of_range("parameter index");
  }
  static std::vector<double> flatten(const MlpGradients& g) {
    std::vector<double> out;
    out.insert(out.end(), g.w1.data(), g.w1.data() + g.w1.size());
    out.insert(out.end(), g.b1.data(), g.b1.data() + g.b1.size());
    out.insert(out.end(), g.w2.data(), g.w2.data() + g.w2.size());
    out.insert(out.end(), g.b2.data(), g.b2.data() + g.b2.size());
    return out;
  }

 private:
  Matrix logits_from_hidden(const Matrix& h) const {
    const auto a = static_cast<Eigen::Index>(active_);
    Matrix z = h * w2_.leftCols(a);
    z.rowwise() += b2_.head(a).transpose();
    return z;
  }

  Eigen::Index label_at(std::span<const int> y, Eigen::Index i) const {
    const int label = y[static_cast<std::size_t>(i)];
    if (label < 0 || label >= static_cast<int>(active_))
      throw std::invalid_argument("training label outside the active outputs");
    return label;
  }

  Matrix w1_;
  Vector b1_;
  Matrix w2_;
  Vector b2_;
  std::size_t active_ = 0;
  bool fitted_ = false;
};

struct TrainingOptions {
  std::size_t epochs = 10;
  double learning_rate = 0.01;
  std::size_t hidden = 100;
};

struct FitReport {
  bool trained = false;              // false when the chunk had no trainable row
  std::size_t rows_used = 0;
  std::vector<double> epoch_losses;  // loss before each epoch's update
  std::map<int, std::size_t> rows_per_label;
};

// Rows with label < revealed take part; the active output count grows to
// revealed before the update.
inline FitReport partial_fit(MlpModel& model, const Matrix& features, std::span<const int> labels,
                             std::size_t revealed, const TrainingOptions& opts = {}) {
  if (labels.size() != static_cast<std::size_t>(features.rows()))
    throw std::invalid_argument("one label per row required");
  model.activate(revealed);
  std::vector<Eigen::Index> rows;
  FitReport report;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0 && labels[i] < static_cast<int>(model.active_outputs())) {
      rows.push_back(static_cast<Eigen::Index>(i));
      ++report.rows_per_label[labels[i]];
    }
  }
  report.rows_used = rows.size();
  if (rows.empty()) return report;

  Matrix x(static_cast<Eigen::Index>(rows.size()), features.cols());
  std::vector<int> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
    y[i] = labels[static_cast<std::size_t>(rows[i])];
  }
  for (std::size_t e = 0; e < opts.epochs; ++e) {
    report.epoch_losses.push_back(model.loss(x, y));
    model.apply(model.gradients(x, y), opts.learning_rate);
  }
  model.mark_fitted();
  report.trained = true;
  return report;
}

struct ThresholdPolicy {
  double epsilon = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  double theta = 0.0;

  void set_support_stats(double mean, double sd) {
    mu = mean;
    sigma = sd;
    theta = mu - epsilon * sigma;
  }
};

// Mean and population standard deviation of the per-row maximum support.
inline std::pair<double, double> max_support_stats(const Matrix& supports) {
  if (supports.rows() == 0) throw std::invalid_argument("no rows to compute support statistics");
  const Vector ymax = supports.rowwise().maxCoeff();
  const double mu = ymax.mean();
  const double var = (ymax.array() - mu).square().mean();
  return {mu, std::sqrt(var)};
}

inline ThresholdPolicy update_threshold(ThresholdPolicy policy, const MlpModel& model,
                                        const Matrix& training_features) {
  auto [mu, sd] = max_support_stats(model.supports(training_features));
  policy.set_support_stats(mu, sd);
  return policy;
}

struct OpenPrediction {
  std::vector<int> labels;  // argmax class or UNKNOWN
  Matrix supports;
};

inline std::vector<int> threshold_verdicts(const Matrix& supports, double theta) {
  std::vector<int> out(static_cast<std::size_t>(supports.rows()));
  for (Eigen::Index i = 0; i < supports.rows(); ++i) {
    Eigen::Index arg = 0;
    const double best = supports.row(i).maxCoeff(&arg);
    out[static_cast<std::size_t>(i)] = best > theta ? static_cast<int>(arg) : UNKNOWN;
  }
  return out;
}

inline OpenPrediction predict_open(const MlpModel& model, const ThresholdPolicy& policy,
                                   const Matrix& features) {
  if (!model.fitted()) throw std::logic_error("model has not been fitted");
  OpenPrediction p;
  p.supports = model.supports(features);
  p.labels = threshold_verdicts(p.supports, policy.theta);
  return p;
}

// Number of leading labels whose training rows may be used after scoring
// chunk t: known classes plus every novel class that a later novel class has
// already followed. The newest novel class stays unrevealed.
inline std::size_t revealed_labels(const GroundTruth& gt, std::size_t n_classes, std::size_t t) {
  std::size_t revealed = n_classes;
  for (std::size_t i = 0; i + 1 < gt.novelty_chunks.size(); ++i)
    if (gt.novelty_chunks[i + 1] <= t) ++revealed;
  return revealed;
}

struct OsrRun {
  std::vector<double> epsilons;
  std::uint64_t seed = 0;
  std::vector<std::vector<OSRScores>> scores;  // [epsilon][chunk]
  std::vector<std::size_t> active_trace;       // active outputs after training on each chunk
  std::map<int, std::size_t> trained_rows;     // audit: rows used per true label
  std::vector<std::vector<double>> epoch_losses;
  // [epsilon][chunk] confusion of the overall view, for requested chunks only.
  std::vector<std::map<std::size_t, std::vector<std::vector<std::size_t>>>> confusion;
};

// Test-then-train over the stream. One network is trained per seed; each
// epsilon only changes the rejection threshold, so all epsilons share it.
inline OsrRun run_osr(const StreamDataset& stream, std::span<const double> epsilons,
                      std::uint64_t seed, const TrainingOptions& opts = {},
                      const std::set<std::size_t>& confusion_chunks = {}) {
  if (stream.config.hide_label)
    throw std::invalid_argument(
        "open-set evaluation needs individual unknown-class labels; regenerate with hide_label "
        "= false");
  if (epsilons.empty()) throw std::invalid_argument("epsilon list must not be empty");
  const auto& cfg = stream.config;
  MlpModel model(cfg.n_features, cfg.n_classes + cfg.n_novel, opts.hidden, seed);
  std::vector<ThresholdPolicy> policies;
  for (double e : epsilons) policies.push_back(ThresholdPolicy{e});

  OsrRun run;
  run.epsilons.assign(epsilons.begin(), epsilons.end());
  run.seed = seed;
  run.scores.assign(epsilons.size(), {});
  run.confusion.assign(epsilons.size(), {});

  for (const auto& chunk : stream.chunks) {
    const std::size_t t = chunk.chunk_index;
    if (model.fitted()) {
      const Matrix supports = model.supports(chunk.features);
      const std::size_t known = model.active_outputs();
      for (std::size_t e = 0; e < epsilons.size(); ++e) {
        auto verdicts = threshold_verdicts(supports, policies[e].theta);
        run.scores[e].push_back(score_chunk(chunk.labels, verdicts, supports, known));
        if (confusion_chunks.count(t))
          run.confusion[e][t] = confusion_matrix(chunk.labels, verdicts, known);
      }
    } else {
      for (auto& s : run.scores) s.push_back(OSRScores{});
    }

    auto report = partial_fit(model, chunk.features, chunk.labels,
                              revealed_labels(stream.ground_truth, cfg.n_classes, t), opts);
    run.active_trace.push_back(model.active_outputs());
    run.epoch_losses.push_back(report.epoch_losses);
    for (auto [label, n] : report.rows_per_label) run.trained_rows[label] += n;
    if (report.trained) {
      Matrix train(static_cast<Eigen::Index>(report.rows_used), chunk.features.cols());
      Eigen::Index r = 0;
      for (std::size_t i = 0; i < chunk.labels.size(); ++i)
        if (chunk.labels[i] < static_cast<int>(model.active_outputs()))
          train.row(r++) = chunk.features.row(static_cast<Eigen::Index>(i));
      auto [mu, sd] = max_support_stats(model.supports(train));
      for (auto& p : policies) p.set_support_stats(mu, sd);
    }
  }
  return run;
}

}  // namespace owdsg
