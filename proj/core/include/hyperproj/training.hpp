#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "hyperproj/clustering.hpp"
#include "hyperproj/dataset.hpp"
#include "hyperproj/embeddings.hpp"
#include "hyperproj/projection.hpp"

namespace hyperproj {

// Defaults are the usual Adam meta-parameters.
struct AdamParams {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Matrix m;
  Matrix v;
  std::size_t t = 0;

  AdamState() = default;
  AdamState(Eigen::Index rows, Eigen::Index cols)
      : m(Matrix::Zero(rows, cols)), v(Matrix::Zero(rows, cols)) {}
};

// One bias-corrected Adam update of `param` in place. Throws NumericError
// if the gradient has a non-finite entry and InputError on shape mismatch.
void adam_step(Matrix& param, const Matrix& grad, AdamState& state, const AdamParams& params);

// d x d matrix with i.i.d. Normal(0, stddev) entries.
Matrix init_matrix(std::size_t d, std::uint64_t seed, double stddev);

enum class SelectOn { final_epoch, best_validation_hit10 };

std::optional<SelectOn> parse_select_on(std::string_view name);
std::string_view select_on_name(SelectOn select);

struct TrainConfig {
  std::size_t epochs = 700;
  std::size_t batch_size = 1024;
  double init_std = 0.1;
  AdamParams adam;
  double lambda = 0.1;
  RegularizerKind regularizer = RegularizerKind::none;
  Similarity reg_similarity = Similarity::dot;
  bool bias = false;
  std::size_t k = 1;
  std::uint64_t seed = 0;
  SelectOn select_on = SelectOn::final_epoch;
  // Used when select_on is best_validation_hit10.
  std::size_t validation_interval = 10;
  Similarity nn_similarity = Similarity::cosine;
  unsigned threads = 1;

  // Throws InputError when a field is out of range.
  void validate() const;
};

struct EpochLoss {
  std::size_t epoch = 0;
  std::size_t cluster = 0;
  LossTerms loss;
};

struct TrainResult {
  ProjectionModel model;
  // Per-epoch example-weighted mean of the batch losses, grouped by cluster
  // then epoch.
  std::vector<EpochLoss> trace;
};

// Per-cluster seed derived from the global seed.
std::uint64_t cluster_seed(std::uint64_t seed, std::size_t cluster, std::uint64_t stream);

// Trains one projection per cluster of `clusters`, routing training pairs by
// their offsets. Each cluster has its own example pool, shuffle stream,
// negative draws and Adam state.
TrainResult train(const RelationDataset& dataset, const EmbeddingTable& table,
                  const ClusterModel& clusters, const TrainConfig& config);

// Fits k-means (k = config.k) on the training offsets and then trains.
TrainResult train(const RelationDataset& dataset, const EmbeddingTable& table,
                  const TrainConfig& config);

// Writes `epoch,cluster,baseline_term,reg_term,total` rows.
void write_loss_trace(const std::vector<EpochLoss>& trace, const std::filesystem::path& path);

}  // namespace hyperproj
