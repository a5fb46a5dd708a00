#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hyperproj/clustering.hpp"
#include "hyperproj/embeddings.hpp"

namespace hyperproj {

using Matrix = Eigen::MatrixXd;

enum class RegularizerKind { none, asymmetric_reproj, asymmetric_plain, neighbor_reproj, neighbor_plain };

// CLI names: none, asym, asym-reproj, neighbor, neighbor-reproj.
std::optional<RegularizerKind> parse_regularizer(std::string_view name);
std::string_view regularizer_name(RegularizerKind kind);

constexpr bool uses_negatives(RegularizerKind kind) {
  return kind == RegularizerKind::neighbor_reproj || kind == RegularizerKind::neighbor_plain;
}
constexpr bool reprojects(RegularizerKind kind) {
  return kind == RegularizerKind::asymmetric_reproj || kind == RegularizerKind::neighbor_reproj;
}

// Row-vector map v -> v * weights + bias. An empty bias means the purely
// linear map.
struct Projection {
  Matrix weights;
  Vector bias;

  Projection() = default;
  Projection(Matrix w) : weights(std::move(w)) {}  // NOLINT(google-explicit-constructor)
  Projection(Matrix w, Vector b) : weights(std::move(w)), bias(std::move(b)) {}

  std::size_t dim() const { return static_cast<std::size_t>(weights.rows()); }
  bool affine() const { return bias.size() != 0; }

  Vector apply(const Vector& x) const;
  Matrix apply(const Matrix& x) const;
};

struct Objective {
  RegularizerKind kind = RegularizerKind::none;
  double lambda = 0.1;
  // Inner product used inside the regularizer.
  Similarity similarity = Similarity::dot;
};

// Rows of x, y and z are aligned examples. z is required for the neighbor
// regularizers only.
struct Batch {
  const Matrix& x;
  const Matrix& y;
  const Matrix* z = nullptr;
};

struct LossTerms {
  double baseline = 0.0;
  double regularizer = 0.0;
  double total = 0.0;
};

struct LossAndGradient {
  LossTerms loss;
  Projection gradient;
};

// Mean squared L2 distance between x*Phi and y.
double loss_baseline(const Projection& phi, const Matrix& x, const Matrix& y);

// Mean of (x Phi Phi . x)^2, or (x Phi . x)^2 without re-projection.
double reg_asymmetric(const Projection& phi, const Matrix& x, bool reproject,
                      Similarity similarity = Similarity::dot);

// Mean of (x Phi Phi . z)^2, or (x Phi . z)^2 without re-projection.
double reg_neighbor(const Projection& phi, const Matrix& x, const Matrix& z, bool reproject,
                    Similarity similarity = Similarity::dot);

// baseline + lambda * regularizer. Throws InputError for shape mismatches or
// a neighbor objective without z.
LossTerms total_loss(const Projection& phi, const Batch& batch, const Objective& objective);

// Analytic gradient of total_loss with respect to the weights (and bias,
// when affine), computed together with the loss.
LossAndGradient loss_and_gradient(const Projection& phi, const Batch& batch,
                                  const Objective& objective);

inline Projection gradient(const Projection& phi, const Batch& batch, const Objective& objective) {
  return loss_and_gradient(phi, batch, objective).gradient;
}

struct TrainingMeta {
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  double init_std = 0.0;
  double adam_alpha = 0.0;
  double adam_beta1 = 0.0;
  double adam_beta2 = 0.0;
  double adam_epsilon = 0.0;
  std::string select_on;
  // Per cluster.
  std::vector<std::size_t> train_pairs;
  std::vector<std::size_t> steps;
  std::vector<std::size_t> selected_epoch;
  std::vector<LossTerms> final_loss;
};

// One projection per cluster plus the clustering used to route pairs.
struct ProjectionModel {
  std::vector<Projection> projections;
  ClusterModel clusters;
  Objective objective;
  TrainingMeta meta;
  std::string vocab_hash;

  std::size_t k() const { return projections.size(); }
  std::size_t dim() const { return projections.empty() ? 0 : projections.front().dim(); }
  bool affine() const { return !projections.empty() && projections.front().affine(); }

  // Throws InputError when shapes disagree or entries are non-finite.
  void validate() const;
};

// x * Phi_cluster (+ bias). Throws InputError on dimension mismatch or an
// out-of-range cluster.
Vector predict(const ProjectionModel& model, const Vector& x, std::size_t cluster);

}  // namespace hyperproj
