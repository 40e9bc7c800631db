#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "core.hpp"

namespace owdsg {

// Prediction value for a row rejected as unknown.
inline constexpr int UNKNOWN = -1;

using Score = std::optional<double>;

struct OSRScores {
  Score inner;
  Score outer;
  Score halfpoint;
  Score overall;
};

// Mean per-class recall over label_set. Classes without true instances are
// left out of the mean; nothing left means undefined.
inline Score balanced_accuracy(std::span<const int> truth, std::span<const int> pred,
                               std::span<const int> label_set) {
  if (truth.size() != pred.size()) throw std::invalid_argument("label vectors differ in length");
  std::vector<std::size_t> total(label_set.size(), 0), hit(label_set.size(), 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto it = std::find(label_set.begin(), label_set.end(), truth[i]);
    if (it == label_set.end()) throw std::invalid_argument("true label outside the label set");
    auto k = static_cast<std::size_t>(it - label_set.begin());
    ++total[k];
    if (pred[i] == truth[i]) ++hit[k];
  }
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t k = 0; k < label_set.size(); ++k) {
    if (total[k] == 0) continue;
    sum += static_cast<double>(hit[k]) / static_cast<double>(total[k]);
    ++present;
  }
  if (present == 0) return std::nullopt;
  return sum / static_cast<double>(present);
}

namespace detail {
inline std::vector<int> iota_labels(std::size_t n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}
inline void check_lengths(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size()) throw std::invalid_argument("label vectors differ in length");
}
}  // namespace detail

// Known (label < n_known) versus unknown recognition. Undefined unless both
// groups are present in truth.
inline Score outer_score(std::span<const int> truth, std::span<const int> pred,
                         std::size_t n_known) {
  detail::check_lengths(truth, pred);
  std::vector<int> t(truth.size()), p(truth.size());
  bool any_known = false, any_unknown = false;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    t[i] = truth[i] >= static_cast<int>(n_known) ? 1 : 0;
    p[i] = pred[i] == UNKNOWN ? 1 : 0;
    (t[i] ? any_unknown : any_known) = true;
  }
  if (!any_known || !any_unknown) return std::nullopt;
  const int binary[] = {0, 1};
  return balanced_accuracy(t, p, binary);
}

// Closed-set quality on known rows: rejected rows fall back to the known
// class with the highest support. supports holds one row per input row and at
// least n_known columns.
inline Score inner_score(std::span<const int> truth, std::span<const int> pred,
                         const Matrix& supports, std::size_t n_known) {
  detail::check_lengths(truth, pred);
  if (static_cast<std::size_t>(supports.rows()) != truth.size() ||
      static_cast<std::size_t>(supports.cols()) < n_known)
    throw std::invalid_argument("supports shape does not match the rows");
  std::vector<int> t, p;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= static_cast<int>(n_known)) continue;
    int guess = pred[i];
    if (guess == UNKNOWN) {
      Eigen::Index best = 0;
      supports.row(static_cast<Eigen::Index>(i)).head(static_cast<Eigen::Index>(n_known)).maxCoeff(&best);
      guess = static_cast<int>(best);
    }
    t.push_back(truth[i]);
    p.push_back(guess);
  }
  if (t.empty()) return std::nullopt;
  return balanced_accuracy(t, p, detail::iota_labels(n_known));
}

// Known-class recall where a rejection counts as a miss.
inline Score halfpoint_score(std::span<const int> truth, std::span<const int> pred,
                             std::size_t n_known) {
  detail::check_lengths(truth, pred);
  std::vector<int> t, p;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= static_cast<int>(n_known)) continue;
    t.push_back(truth[i]);
    p.push_back(pred[i]);
  }
  if (t.empty()) return std::nullopt;
  return balanced_accuracy(t, p, detail::iota_labels(n_known));
}

// Unknown rows and rejections share one extra label n_known.
inline Score overall_score(std::span<const int> truth, std::span<const int> pred,
                           std::size_t n_known) {
  detail::check_lengths(truth, pred);
  if (truth.empty()) return std::nullopt;
  const int unknown = static_cast<int>(n_known);
  std::vector<int> t(truth.size()), p(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    t[i] = std::min(truth[i], unknown);
    p[i] = pred[i] == UNKNOWN ? unknown : pred[i];
  }
  return balanced_accuracy(t, p, detail::iota_labels(n_known + 1));
}

inline OSRScores score_chunk(std::span<const int> truth, std::span<const int> pred,
                             const Matrix& supports, std::size_t n_known) {
  return OSRScores{inner_score(truth, pred, supports, n_known), outer_score(truth, pred, n_known),
                   halfpoint_score(truth, pred, n_known), overall_score(truth, pred, n_known)};
}

// (n_known + 1)^2 counts, rows = truth, columns = prediction; unknown truth
// and UNKNOWN predictions share the last index.
inline std::vector<std::vector<std::size_t>> confusion_matrix(std::span<const int> truth,
                                                              std::span<const int> pred,
                                                              std::size_t n_known) {
  detail::check_lengths(truth, pred);
  std::vector<std::vector<std::size_t>> cm(n_known + 1, std::vector<std::size_t>(n_known + 1, 0));
  auto index = [&](int label) {
    if (label == UNKNOWN || label >= static_cast<int>(n_known)) return n_known;
    if (label < 0) throw std::invalid_argument("negative label");
    return static_cast<std::size_t>(label);
  };
  for (std::size_t i = 0; i < truth.size(); ++i) ++cm[index(truth[i])][index(pred[i])];
  return cm;
}

}  // namespace owdsg
