#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "core.hpp"
#include "generator.hpp"

namespace owdsg {

// Rows per known class: floor of the weighted share, leftovers handed out
// one at a time by descending weight (lower class index wins ties).
inline std::vector<std::size_t> kc_allocation(const std::vector<double>& weights,
                                              std::size_t chunk_size) {
  std::vector<std::size_t> counts(weights.size());
  std::size_t used = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    // 1e-9 absorbs representation error such as 0.29 * 100 = 28.999...
    counts[k] = static_cast<std::size_t>(std::floor(weights[k] * chunk_size + 1e-9));
    used += counts[k];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  for (std::size_t i = 0; used < chunk_size; i = (i + 1) % order.size(), ++used)
    ++counts[order[i]];
  return counts;
}

// Rows each active novel class writes into a chunk.
inline std::size_t novel_rows(double percentage_novel, std::size_t chunk_size) {
  return static_cast<std::size_t>(std::round(percentage_novel * static_cast<double>(chunk_size)));
}

namespace detail {

// Writes `count` rows of one class into `out` starting at `row`, drawing the
// sub-cluster of each row uniformly.
template <typename ClusterOf>
void fill_class_rows(const StaticGenerator& gen, ClusterOf cluster_of, std::size_t count,
                     Rng& rng, Matrix& out, const std::vector<std::size_t>& rows) {
  const std::size_t k = gen.clusters_per_class();
  std::vector<std::size_t> sub(count, 0);
  if (k > 1) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    for (auto& s : sub) s = pick(rng);
  }
  for (std::size_t s = 0; s < k; ++s) {
    std::vector<std::size_t> mine;
    for (std::size_t i = 0; i < count; ++i)
      if (sub[i] == s) mine.push_back(rows[i]);
    if (mine.empty()) continue;
    Matrix block = sample_cluster(gen, cluster_of(s), mine.size(), rng);
    for (std::size_t i = 0; i < mine.size(); ++i)
      out.row(static_cast<Eigen::Index>(mine[i])) = block.row(static_cast<Eigen::Index>(i));
  }
}

}  // namespace detail

struct AssembleOptions {
  bool shuffle = true;  // debug switch; sampled values do not depend on it
};

inline Chunk assemble_chunk(const StaticGenerator& gen, const GroundTruth& gt,
                            const GeneratorConfig& config, std::uint64_t master_seed,
                            std::size_t chunk_index, AssembleOptions opts = {}) {
  const std::size_t n = config.chunk_size;
  const std::size_t concept_index = concept_at(gt, chunk_index);
  auto sampling = make_rng(master_seed, SeedPurpose::chunk_sampling, chunk_index);
  auto replacement = make_rng(master_seed, SeedPurpose::chunk_replacement, chunk_index);
  auto shuffling = make_rng(master_seed, SeedPurpose::chunk_shuffle, chunk_index);

  Chunk chunk;
  chunk.chunk_index = chunk_index;
  chunk.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(gen.n_features()));
  chunk.labels.assign(n, 0);

  // Known classes first, in class order.
  auto counts = kc_allocation(config.weights, n);
  std::size_t row = 0;
  for (std::size_t cls = 0; cls < counts.size(); ++cls) {
    std::vector<std::size_t> rows(counts[cls]);
    std::iota(rows.begin(), rows.end(), row);
    detail::fill_class_rows(
        gen, [&](std::size_t s) { return gen.known_cluster(concept_index, cls, s); }, counts[cls],
        sampling, chunk.features, rows);
    std::fill_n(chunk.labels.begin() + static_cast<std::ptrdiff_t>(row), counts[cls],
                static_cast<int>(cls));
    row += counts[cls];
  }

  // Each active novel class overwrites a fresh random subset of all rows.
  const std::size_t m = std::min(novel_rows(config.percentage_novel, n), n);
  std::vector<std::size_t> positions(n);
  for (int label : active_unknowns(gt, config.n_classes, chunk_index)) {
    const std::size_t uc = static_cast<std::size_t>(label) - config.n_classes;
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(positions[i], positions[pick(replacement)]);
    }
    std::vector<std::size_t> chosen(positions.begin(), positions.begin() + static_cast<std::ptrdiff_t>(m));
    detail::fill_class_rows(
        gen, [&](std::size_t s) { return gen.unknown_cluster(uc, s); }, m, sampling,
        chunk.features, chosen);
    for (auto p : chosen) chunk.labels[p] = label;
  }

  if (opts.shuffle) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), shuffling);
    Matrix shuffled(chunk.features.rows(), chunk.features.cols());
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      shuffled.row(static_cast<Eigen::Index>(i)) =
          chunk.features.row(static_cast<Eigen::Index>(perm[i]));
      labels[i] = chunk.labels[perm[i]];
    }
    chunk.features = std::move(shuffled);
    chunk.labels = std::move(labels);
  }

  if (config.hide_label) {
    const int common = static_cast<int>(config.n_classes);
    for (auto& l : chunk.labels) l = std::min(l, common);
  }
  return chunk;
}

inline StreamDataset generate_stream(const GeneratorConfig& config, std::uint64_t master_seed,
                                     AssembleOptions opts = {}) {
  require_valid(config);
  StreamDataset ds;
  ds.config = config;
  ds.master_seed = master_seed;
  ds.ground_truth = make_ground_truth(config, master_seed);
  const auto gen = build_static(config, master_seed);
  ds.chunks.reserve(config.n_chunks);
  for (std::size_t t = 0; t < config.n_chunks; ++t)
    ds.chunks.push_back(assemble_chunk(gen, ds.ground_truth, config, master_seed, t, opts));
  return ds;
}

inline StreamDataset generate_stream(const GeneratorConfig& config) {
  return generate_stream(config, resolve_seed(config));
}

}  // namespace owdsg
