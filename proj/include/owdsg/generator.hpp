#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "core.hpp"

namespace owdsg {

// Sampling recipe of one Gaussian cluster placed on a hypercube vertex.
struct ClusterModel {
  Vector vertex;  // d_gen entries, each +-class_sep
  Matrix mixing;  // d_gen x d_gen
  std::size_t cluster_id = 0;
};

class StaticGenerator {
 public:
  StaticGenerator(std::vector<ClusterModel> clusters, std::size_t d_gen, std::size_t n_features,
                  std::optional<Matrix> projection, std::size_t n_classes,
                  std::size_t clusters_per_class, std::size_t n_concepts, std::size_t n_novel)
      : clusters_(std::move(clusters)),
        d_gen_(d_gen),
        n_features_(n_features),
        projection_(std::move(projection)),
        n_classes_(n_classes),
        per_class_(clusters_per_class),
        n_concepts_(n_concepts),
        n_novel_(n_novel) {}

  std::size_t d_gen() const { return d_gen_; }
  std::size_t n_features() const { return n_features_; }
  std::size_t n_clusters() const { return clusters_.size(); }
  std::size_t clusters_per_class() const { return per_class_; }
  const std::optional<Matrix>& projection() const { return projection_; }
  const ClusterModel& cluster(std::size_t id) const { return clusters_.at(id); }

  // Known classes move to fresh clusters with every concept.
  std::size_t known_cluster(std::size_t concept_index, std::size_t cls, std::size_t sub) const {
    if (concept_index >= n_concepts_ || cls >= n_classes_ || sub >= per_class_)
      throw std::out_of_range("known-class cluster key out of range");
    return (concept_index * n_classes_ + cls) * per_class_ + sub;
  }

  // Novel-class clusters sit after every concept's known clusters and do not
  // depend on the concept.
  std::size_t unknown_cluster(std::size_t uc_index, std::size_t sub) const {
    if (uc_index >= n_novel_ || sub >= per_class_)
      throw std::out_of_range("unknown-class cluster key out of range");
    return n_concepts_ * n_classes_ * per_class_ + uc_index * per_class_ + sub;
  }

 private:
  std::vector<ClusterModel> clusters_;
  std::size_t d_gen_;
  std::size_t n_features_;
  std::optional<Matrix> projection_;
  std::size_t n_classes_;
  std::size_t per_class_;
  std::size_t n_concepts_;
  std::size_t n_novel_;
};

inline Matrix project(const Matrix& data, const Matrix& projection) {
  if (data.cols() != projection.rows())
    throw std::invalid_argument("projection shape does not match data columns");
  return data * projection;
}

namespace detail {

using VertexBits = std::vector<std::uint64_t>;

inline VertexBits random_vertex(std::size_t dims, Rng& rng) {
  VertexBits bits((dims + 63) / 64);
  for (std::size_t w = 0; w < bits.size(); ++w) {
    bits[w] = rng();
    std::size_t used = std::min<std::size_t>(64, dims - 64 * w);
    if (used < 64) bits[w] &= (std::uint64_t{1} << used) - 1;
  }
  return bits;
}

// n distinct vertices of {0,1}^dims, uniformly without replacement.
inline std::vector<VertexBits> distinct_vertices(std::size_t dims, std::size_t n, Rng& rng) {
  if (!hypercube_fits(dims, n)) throw std::invalid_argument("not enough hypercube vertices");
  std::vector<VertexBits> out;
  out.reserve(n);
  if (dims <= 20 && (std::size_t{1} << dims) <= 4 * n) {
    // Dense case: partial shuffle of every vertex index.
    std::vector<std::uint64_t> all(std::size_t{1} << dims);
    std::iota(all.begin(), all.end(), std::uint64_t{0});
    for (std::size_t i = 0; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
      std::swap(all[i], all[pick(rng)]);
      out.push_back(VertexBits{all[i]});
    }
    return out;
  }
  std::set<VertexBits> seen;
  while (out.size() < n) {
    auto v = random_vertex(dims, rng);
    if (seen.insert(v).second) out.push_back(std::move(v));
  }
  return out;
}

inline bool bit(const VertexBits& v, std::size_t i) { return (v[i / 64] >> (i % 64)) & 1U; }

}  // namespace detail

// Builds every cluster a stream will ever sample from. Generation
// dimensionality is n_informative when the hypercube has room for all
// clusters, otherwise the smallest sufficient dimensionality followed by a
// random projection down to n_features.
inline StaticGenerator build_static(const GeneratorConfig& config, std::uint64_t master_seed) {
  require_valid(config);
  const std::size_t n_total = total_clusters(config);

  std::size_t d_gen = 0;
  bool needs_projection = false;
  if (hypercube_fits(config.n_informative, n_total)) {
    d_gen = config.n_informative;
    needs_projection = config.n_features > config.n_informative;
  } else if (config.allow_projection) {
    d_gen = required_dims(n_total);
    needs_projection = true;
  } else {
    throw ValidationError({ConfigError::dimensionality_too_low});
  }

  auto geometry = make_rng(master_seed, SeedPurpose::cluster_geometry);
  auto vertices = detail::distinct_vertices(d_gen, n_total, geometry);
  std::uniform_real_distribution<double> mix(-1.0, 1.0);

  std::vector<ClusterModel> clusters;
  clusters.reserve(n_total);
  for (std::size_t id = 0; id < n_total; ++id) {
    ClusterModel c;
    c.cluster_id = id;
    c.vertex.resize(static_cast<Eigen::Index>(d_gen));
    for (std::size_t j = 0; j < d_gen; ++j)
      c.vertex(static_cast<Eigen::Index>(j)) =
          detail::bit(vertices[id], j) ? config.class_sep : -config.class_sep;
    c.mixing.resize(static_cast<Eigen::Index>(d_gen), static_cast<Eigen::Index>(d_gen));
    for (Eigen::Index r = 0; r < c.mixing.rows(); ++r)
      for (Eigen::Index col = 0; col < c.mixing.cols(); ++col) c.mixing(r, col) = mix(geometry);
    clusters.push_back(std::move(c));
  }

  std::optional<Matrix> projection;
  if (needs_projection) {
    auto prng = make_rng(master_seed, SeedPurpose::projection);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_gen));
    Matrix p(static_cast<Eigen::Index>(d_gen), static_cast<Eigen::Index>(config.n_features));
    for (Eigen::Index r = 0; r < p.rows(); ++r)
      for (Eigen::Index c = 0; c < p.cols(); ++c) p(r, c) = normal(prng) * scale;
    projection = std::move(p);
  }

  return StaticGenerator(std::move(clusters), d_gen, config.n_features, std::move(projection),
                         config.n_classes, config.n_clusters_per_class, config.n_drifts + 1,
                         config.n_novel);
}

// count rows of vertex + mixing * z, z ~ N(0, I), projected when the
// generator carries a projection.
inline Matrix sample_cluster(const StaticGenerator& gen, std::size_t cluster_id, std::size_t count,
                             Rng& rng) {
  if (cluster_id >= gen.n_clusters()) throw std::out_of_range("unknown cluster id");
  const auto& c = gen.cluster(cluster_id);
  const auto d = static_cast<Eigen::Index>(gen.d_gen());
  const auto n = static_cast<Eigen::Index>(count);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = normal(rng);
  Matrix x = z * c.mixing.transpose();
  x.rowwise() += c.vertex.transpose();
  if (gen.projection()) return project(x, *gen.projection());
  return x;
}

}  // namespace owdsg
