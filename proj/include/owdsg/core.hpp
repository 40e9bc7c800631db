#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace owdsg {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

enum class SeedPurpose : std::uint64_t {
  drift_placement = 1,
  novelty_placement = 2,
  cluster_geometry = 3,
  projection = 4,
  chunk_sampling = 5,
  chunk_replacement = 6,
  chunk_shuffle = 7,
  model_init = 8,
};

// Sub-seed for (purpose, index) under a master seed. Every random decision in
// the library draws from a generator seeded through here.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, SeedPurpose purpose,
                                           std::uint64_t index = 0) {
  std::uint64_t s = splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(purpose)));
  return splitmix64(s + splitmix64(index + 0x632BE59BD9B4E019ULL));
}

inline Rng make_rng(std::uint64_t master, SeedPurpose purpose, std::uint64_t index = 0) {
  return Rng{derive_seed(master, purpose, index)};
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct GeneratorConfig {
  std::size_t n_chunks = 200;
  std::size_t chunk_size = 200;
  std::size_t n_drifts = 0;
  std::size_t n_novel = 0;
  double percentage_novel = 0.1;
  bool even_gt = true;
  bool hide_label = false;
  std::size_t n_classes = 2;
  std::vector<double> weights{0.5, 0.5};
  std::size_t n_clusters_per_class = 1;
  double class_sep = 1.0;
  std::size_t n_features = 10;
  std::size_t n_informative = 10;
  bool allow_projection = true;
  std::optional<std::uint64_t> random_state;

  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

enum class ConfigError {
  chunks_not_positive,
  chunk_size_not_positive,
  too_many_drifts,
  too_many_novel,
  percentage_out_of_range,
  too_few_classes,
  weights_size_mismatch,
  weight_not_positive,
  weights_do_not_sum_to_one,
  clusters_not_positive,
  class_sep_not_positive,
  features_not_positive,
  informative_not_positive,
  informative_exceeds_features,
  dimensionality_too_low,
};

inline std::string_view message(ConfigError e) {
  switch (e) {
    case ConfigError::chunks_not_positive: return "n_chunks must be positive";
    case ConfigError::chunk_size_not_positive: return "chunk_size must be positive";
    case ConfigError::too_many_drifts: return "n_drifts must be smaller than n_chunks";
    case ConfigError::too_many_novel: return "n_novel must be smaller than n_chunks";
    case ConfigError::percentage_out_of_range: return "percentage_novel must lie in [0, 1)";
    case ConfigError::too_few_classes: return "n_classes must be at least 2";
    case ConfigError::weights_size_mismatch: return "weights must have n_classes entries";
    case ConfigError::weight_not_positive: return "weights must be positive";
    case ConfigError::weights_do_not_sum_to_one: return "weights do not sum to 1";
    case ConfigError::clusters_not_positive: return "n_clusters_per_class must be positive";
    case ConfigError::class_sep_not_positive: return "class_sep must be positive";
    case ConfigError::features_not_positive: return "n_features must be positive";
    case ConfigError::informative_not_positive: return "n_informative must be positive";
    case ConfigError::informative_exceeds_features: return "informative exceeds features";
    case ConfigError::dimensionality_too_low:
      return "dimensionality too low and projection disallowed";
  }
  return "unknown configuration error";
}

// Thrown by operations that require a valid configuration.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<ConfigError> errors)
      : std::invalid_argument(join(errors)), errors_(std::move(errors)) {}

  const std::vector<ConfigError>& errors() const noexcept { return errors_; }

 private:
  static std::string join(const std::vector<ConfigError>& errors) {
    std::string out;
    for (auto e : errors) {
      if (!out.empty()) out += "; ";
      out += message(e);
    }
    return out;
  }
  std::vector<ConfigError> errors_;
};

// Total number of hypercube clusters: one set of known-class clusters per
// concept (n_drifts + 1 concepts) plus one set per novel class.
inline std::size_t total_clusters(const GeneratorConfig& c) {
  return (c.n_drifts + 1) * c.n_classes * c.n_clusters_per_class +
         c.n_novel * c.n_clusters_per_class;
}

// Smallest d with 2^d > n.
inline std::size_t required_dims(std::size_t n_total_clusters) {
  std::size_t d = 0;
  while (d < 64 && (std::uint64_t{1} << d) <= n_total_clusters) ++d;
  return d;
}

inline bool hypercube_fits(std::size_t dims, std::size_t n_total_clusters) {
  return dims >= 64 || (std::uint64_t{1} << dims) > n_total_clusters;
}

inline std::vector<ConfigError> validate(const GeneratorConfig& c) {
  std::vector<ConfigError> errs;
  if (c.n_chunks == 0) errs.push_back(ConfigError::chunks_not_positive);
  if (c.chunk_size == 0) errs.push_back(ConfigError::chunk_size_not_positive);
  if (c.n_drifts >= c.n_chunks) errs.push_back(ConfigError::too_many_drifts);
  if (c.n_novel >= c.n_chunks) errs.push_back(ConfigError::too_many_novel);
  if (!(c.percentage_novel >= 0.0 && c.percentage_novel < 1.0))
    errs.push_back(ConfigError::percentage_out_of_range);
  if (c.n_classes < 2) errs.push_back(ConfigError::too_few_classes);
  if (c.weights.size() != c.n_classes) {
    errs.push_back(ConfigError::weights_size_mismatch);
  } else {
    if (std::any_of(c.weights.begin(), c.weights.end(), [](double w) { return !(w > 0.0); }))
      errs.push_back(ConfigError::weight_not_positive);
    double sum = std::accumulate(c.weights.begin(), c.weights.end(), 0.0);
    if (!(std::abs(sum - 1.0) <= 1e-9)) errs.push_back(ConfigError::weights_do_not_sum_to_one);
  }
  if (c.n_clusters_per_class == 0) errs.push_back(ConfigError::clusters_not_positive);
  if (!(c.class_sep > 0.0)) errs.push_back(ConfigError::class_sep_not_positive);
  if (c.n_features == 0) errs.push_back(ConfigError::features_not_positive);
  if (c.n_informative == 0) errs.push_back(ConfigError::informative_not_positive);
  if (c.n_informative > c.n_features) errs.push_back(ConfigError::informative_exceeds_features);
  if (!c.allow_projection && c.n_informative > 0 && c.n_clusters_per_class > 0 &&
      !hypercube_fits(c.n_informative, total_clusters(c)))
    errs.push_back(ConfigError::dimensionality_too_low);
  return errs;
}

inline void require_valid(const GeneratorConfig& c) {
  auto errs = validate(c);
  if (!errs.empty()) throw ValidationError(std::move(errs));
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

struct GroundTruth {
  std::size_t n_chunks = 0;
  std::vector<std::size_t> drift_chunks;
  std::vector<std::size_t> novelty_chunks;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

// Event chunk indices. Even placement is a pure function of the counts;
// random placement draws distinct indices from [1, n_chunks - 1].
inline std::vector<std::size_t> place_events(std::size_t n_chunks, std::size_t n_events, bool even,
                                             Rng& rng) {
  if (n_events >= n_chunks)
    throw std::invalid_argument("number of events must be smaller than the number of chunks");
  std::vector<std::size_t> out;
  out.reserve(n_events);
  if (even) {
    for (std::size_t i = 1; i <= n_events; ++i) out.push_back(n_chunks * i / (n_events + 1));
    return out;
  }
  // Partial Fisher-Yates over [1, n_chunks - 1].
  std::vector<std::size_t> pool(n_chunks - 1);
  std::iota(pool.begin(), pool.end(), std::size_t{1});
  for (std::size_t i = 0; i < n_events; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
    out.push_back(pool[i]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline GroundTruth make_ground_truth(const GeneratorConfig& c, std::uint64_t master_seed) {
  auto drift_rng = make_rng(master_seed, SeedPurpose::drift_placement);
  auto novel_rng = make_rng(master_seed, SeedPurpose::novelty_placement);
  return GroundTruth{c.n_chunks, place_events(c.n_chunks, c.n_drifts, c.even_gt, drift_rng),
                     place_events(c.n_chunks, c.n_novel, c.even_gt, novel_rng)};
}

namespace detail {
inline void check_chunk_index(const GroundTruth& gt, std::size_t chunk_index) {
  if (chunk_index >= gt.n_chunks) throw std::out_of_range("chunk index outside the stream");
}
}  // namespace detail

// Concept index active at a chunk. A drift takes effect at its own chunk.
inline std::size_t concept_at(const GroundTruth& gt, std::size_t chunk_index) {
  detail::check_chunk_index(gt, chunk_index);
  return static_cast<std::size_t>(
      std::upper_bound(gt.drift_chunks.begin(), gt.drift_chunks.end(), chunk_index) -
      gt.drift_chunks.begin());
}

// Labels of the novel classes that have emerged by chunk_index, oldest first.
inline std::vector<int> active_unknowns(const GroundTruth& gt, std::size_t n_classes,
                                        std::size_t chunk_index) {
  detail::check_chunk_index(gt, chunk_index);
  std::vector<int> out;
  for (std::size_t i = 0; i < gt.novelty_chunks.size(); ++i)
    if (gt.novelty_chunks[i] <= chunk_index) out.push_back(static_cast<int>(n_classes + i));
  return out;
}

// ---------------------------------------------------------------------------
// Stream data model
// ---------------------------------------------------------------------------

struct Chunk {
  Matrix features;          // chunk_size x n_features
  std::vector<int> labels;  // chunk_size
  std::size_t chunk_index = 0;

  std::size_t size() const { return labels.size(); }
};

struct StreamDataset {
  GeneratorConfig config;
  GroundTruth ground_truth;
  std::uint64_t master_seed = 0;
  std::vector<Chunk> chunks;
};

// Master seed used for generation: random_state when given, otherwise fresh
// entropy (recorded by callers that persist the stream).
inline std::uint64_t resolve_seed(const GeneratorConfig& c) {
  if (c.random_state) return *c.random_state;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace owdsg
