#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hyperproj/dataset.hpp"
#include "hyperproj/embeddings.hpp"

namespace hyperproj {

struct KMeansOptions {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  std::size_t max_iter = 100;
  // Absolute centroid movement below which iteration stops.
  double tol = 1e-6;
  unsigned threads = 1;
};

struct ClusterModel {
  RowMatrix centroids;  // k x d
  double inertia = 0.0;
  // Inertia after each assignment step; non-increasing.
  std::vector<double> inertia_trace;
  std::size_t iterations = 0;

  std::size_t k() const { return static_cast<std::size_t>(centroids.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(centroids.cols()); }
};

// Row i is vector(target_i) - vector(source_i). Throws InputError for words
// missing from the table.
RowMatrix offsets(const std::vector<RelationPair>& pairs, const EmbeddingTable& table);

// Lloyd iterations from seeded k-means++ initialization. An emptied cluster
// is reseeded at the point farthest from its assigned centroid.
ClusterModel fit_kmeans(const RowMatrix& points, const KMeansOptions& options);

// Nearest centroid by squared Euclidean distance, ties to the lower index.
std::size_t assign_cluster(const ClusterModel& model, const Vector& offset);

}  // namespace hyperproj
