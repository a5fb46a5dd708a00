#include "hyperproj/clustering.hpp"

#include <limits>
#include <random>
#include <string>

#include "hyperproj/error.hpp"
#include "hyperproj/parallel.hpp"

namespace hyperproj {

RowMatrix offsets(const std::vector<RelationPair>& pairs, const EmbeddingTable& table) {
  RowMatrix out(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(table.dim()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto source = table.lookup(pairs[i].source);
    const auto target = table.lookup(pairs[i].target);
    if (!source || !target) {
      throw InputError("offsets: pair (" + pairs[i].source + ", " + pairs[i].target +
                       ") has a word outside the vocabulary");
    }
    out.row(static_cast<Eigen::Index>(i)) = table.row(*target) - table.row(*source);
  }
  return out;
}

namespace {

struct Assignment {
  std::vector<std::size_t> labels;
  std::vector<double> distances;  // squared distance to the assigned centroid
  double inertia = 0.0;
};

Assignment assign_all(const RowMatrix& points, const RowMatrix& centroids, unsigned threads) {
  const auto n = static_cast<std::size_t>(points.rows());
  Assignment a{std::vector<std::size_t>(n), std::vector<double>(n), 0.0};
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto p = points.row(static_cast<Eigen::Index>(i));
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
        const double d = (p - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = static_cast<std::size_t>(c);
        }
      }
      a.labels[i] = best;
      a.distances[i] = best_d;
    }
  });
  for (const double d : a.distances) a.inertia += d;
  return a;
}

RowMatrix kmeanspp_init(const RowMatrix& points, std::size_t k, std::mt19937_64& rng) {
  const auto n = static_cast<std::size_t>(points.rows());
  RowMatrix centroids(static_cast<Eigen::Index>(k), points.cols());
  std::vector<bool> chosen(n, false);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t pick = first(rng);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < k; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : nearest[i];
      pick = n;
      if (total > 0.0) {
        std::uniform_real_distribution<double> draw(0.0, total);
        const double r = draw(rng);
        double cumulative = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (chosen[i] || nearest[i] == 0.0) continue;
          cumulative += nearest[i];
          pick = i;
          if (cumulative > r) break;
        }
      }
      if (pick == n) {
        // Every remaining point coincides with a centroid.
        for (std::size_t i = 0; i < n; ++i) {
          if (!chosen[i]) {
            pick = i;
            break;
          }
        }
      }
    }
    chosen[pick] = true;
    centroids.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(pick));
    const auto center = centroids.row(static_cast<Eigen::Index>(c));
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], (points.row(static_cast<Eigen::Index>(i)) - center).squaredNorm());
    }
  }
  return centroids;
}

}  // namespace

ClusterModel fit_kmeans(const RowMatrix& points, const KMeansOptions& options) {
  const auto n = static_cast<std::size_t>(points.rows());
  const std::size_t k = options.k;
  if (k == 0) throw InputError("k-means: k must be positive");
  if (k > n) {
    throw InputError("k-means: k = " + std::to_string(k) + " exceeds the " + std::to_string(n) + " points");
  }
  if (options.max_iter == 0) throw InputError("k-means: max_iter must be at least 1");
  if (!points.allFinite()) throw InputError("k-means: non-finite offsets");

  std::mt19937_64 rng(options.seed);
  ClusterModel model;
  model.centroids = kmeanspp_init(points, k, rng);

  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    const Assignment a = assign_all(points, model.centroids, options.threads);
    model.inertia_trace.push_back(a.inertia);
    ++model.iterations;

    RowMatrix sums = RowMatrix::Zero(static_cast<Eigen::Index>(k), points.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(a.labels[i])) += points.row(static_cast<Eigen::Index>(i));
      ++counts[a.labels[i]];
    }
    RowMatrix next = model.centroids;
    std::vector<bool> used_for_repair(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      const auto row = static_cast<Eigen::Index>(c);
      if (counts[c] > 0) {
        next.row(row) = sums.row(row) / static_cast<double>(counts[c]);
        continue;
      }
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!used_for_repair[i] && a.distances[i] > far_d) {
          far_d = a.distances[i];
          far = i;
        }
      }
      used_for_repair[far] = true;
      next.row(row) = points.row(static_cast<Eigen::Index>(far));
    }
    const double movement = (next - model.centroids).rowwise().norm().maxCoeff();
    model.centroids = std::move(next);
    if (movement < options.tol) break;
  }
  const Assignment final_assignment = assign_all(points, model.centroids, options.threads);
  model.inertia = final_assignment.inertia;
  model.inertia_trace.push_back(model.inertia);
  return model;
}

std::size_t assign_cluster(const ClusterModel& model, const Vector& offset) {
  if (static_cast<std::size_t>(offset.size()) != model.dim()) {
    throw InputError("assign_cluster: offset has dimension " + std::to_string(offset.size()) +
                     ", centroids have " + std::to_string(model.dim()));
  }
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < model.centroids.rows(); ++c) {
    const double d = (offset - model.centroids.row(c)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(c);
    }
  }
  return best;
}

}  // namespace hyperproj
