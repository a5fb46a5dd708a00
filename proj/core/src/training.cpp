#include "hyperproj/training.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "hyperproj/error.hpp"
#include "hyperproj/log.hpp"
#include "hyperproj/parallel.hpp"

namespace hyperproj {

void adam_step(Matrix& param, const Matrix& grad, AdamState& state, const AdamParams& params) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols() || state.m.rows() != param.rows() ||
      state.m.cols() != param.cols() || state.v.rows() != param.rows() || state.v.cols() != param.cols()) {
    throw InputError("adam_step: parameter, gradient and state shapes differ");
  }
  if (!grad.allFinite()) throw NumericError("adam_step: non-finite gradient");
  ++state.t;
  const double t = static_cast<double>(state.t);
  state.m = params.beta1 * state.m + (1.0 - params.beta1) * grad;
  state.v = params.beta2 * state.v + (1.0 - params.beta2) * grad.cwiseAbs2();
  const double m_correction = 1.0 - std::pow(params.beta1, t);
  const double v_correction = 1.0 - std::pow(params.beta2, t);
  param.array() -= params.alpha * (state.m.array() / m_correction) /
                   ((state.v.array() / v_correction).sqrt() + params.epsilon);
}

Matrix init_matrix(std::size_t d, std::uint64_t seed, double stddev) {
  if (d == 0) throw InputError("init_matrix: dimension must be at least 1");
  if (!(stddev > 0.0)) throw InputError("init_matrix: standard deviation must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, stddev);
  const auto n = static_cast<Eigen::Index>(d);
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = normal(rng);
  }
  return m;
}

std::optional<SelectOn> parse_select_on(std::string_view name) {
  if (name == "final") return SelectOn::final_epoch;
  if (name == "best_validation_hit10") return SelectOn::best_validation_hit10;
  return std::nullopt;
}

std::string_view select_on_name(SelectOn select) {
  return select == SelectOn::final_epoch ? "final" : "best_validation_hit10";
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InputError("epochs must be at least 1");
  if (batch_size < 1) throw InputError("batch size must be at least 1");
  if (!(init_std > 0.0) || !std::isfinite(init_std)) throw InputError("init std must be positive");
  if (!(adam.alpha > 0.0)) throw InputError("Adam learning rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw InputError("Adam beta1 must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw InputError("Adam beta2 must lie in [0, 1)");
  if (!(adam.epsilon > 0.0)) throw InputError("Adam epsilon must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be non-negative");
  if (k < 1) throw InputError("k must be at least 1");
  if (validation_interval < 1) throw InputError("validation interval must be at least 1");
}

std::uint64_t cluster_seed(std::uint64_t seed, std::size_t cluster, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(cluster), static_cast<std::uint32_t>(stream)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

namespace {

struct PairRows {
  std::vector<std::size_t> source;
  std::vector<std::size_t> target;
  std::vector<std::size_t> cluster;
};

PairRows resolve(const std::vector<RelationPair>& pairs, const EmbeddingTable& table,
                 const ClusterModel& clusters, bool require) {
  PairRows rows;
  for (const auto& p : pairs) {
    const auto s = table.lookup(p.source);
    const auto t = table.lookup(p.target);
    if (!s || !t) {
      if (require) {
        throw InputError("training pair (" + p.source + ", " + p.target + ") is not bound to the embeddings");
      }
      continue;
    }
    rows.source.push_back(*s);
    rows.target.push_back(*t);
    rows.cluster.push_back(assign_cluster(clusters, table.row(*t) - table.row(*s)));
  }
  return rows;
}

Matrix gather(const EmbeddingTable& table, const std::vector<std::size_t>& rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.dim()));
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = table.row(rows[i]);
  return m;
}

double cluster_hit_at_10(const Projection& phi, const EmbeddingTable& table, const PairRows& pairs,
                         const std::vector<std::size_t>& members, Similarity similarity) {
  std::size_t hits = 0;
  NeighborQuery query;
  query.l = 10;
  query.similarity = similarity;
  for (const std::size_t i : members) {
    query.exclude = pairs.source[i];
    const Vector projected = phi.apply(Vector(table.row(pairs.source[i])));
    try {
      const auto nn = nearest_neighbors(table, projected, query);
      if (std::any_of(nn.begin(), nn.end(), [&](const Neighbor& n) { return n.index == pairs.target[i]; })) {
        ++hits;
      }
    } catch (const NumericError&) {
      // zero projection: a miss
    }
  }
  return static_cast<double>(hits) / static_cast<double>(members.size());
}

struct ClusterOutcome {
  Projection projection;
  std::vector<EpochLoss> trace;
  std::size_t steps = 0;
  std::size_t selected_epoch = 0;
  LossTerms final_loss;
};

}  // namespace

TrainResult train(const RelationDataset& dataset, const EmbeddingTable& table, const ClusterModel& clusters,
                  const TrainConfig& config) {
  config.validate();
  const std::size_t d = table.dim();
  const std::size_t k = clusters.k();
  if (clusters.dim() != d) throw InputError("cluster model dimension does not match the embeddings");
  if (k == 0) throw InputError("cluster model is empty");

  const PairRows train_rows = resolve(dataset.bucket(Bucket::train), table, clusters, true);
  const bool select_best = config.select_on == SelectOn::best_validation_hit10;
  const PairRows val_rows =
      select_best ? resolve(dataset.bucket(Bucket::validation), table, clusters, false) : PairRows{};

  std::vector<std::vector<std::size_t>> pools(k);
  for (std::size_t i = 0; i < train_rows.source.size(); ++i) pools[train_rows.cluster[i]].push_back(i);
  std::vector<std::vector<std::size_t>> val_members(k);
  for (std::size_t i = 0; i < val_rows.source.size(); ++i) val_members[val_rows.cluster[i]].push_back(i);

  Objective objective{config.regularizer, config.lambda, config.reg_similarity};
  if (objective.kind == RegularizerKind::none) objective.lambda = 0.0;
  const bool neighbors = uses_negatives(objective.kind);

  std::vector<ClusterOutcome> outcomes(k);
  parallel_for(k, config.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      ClusterOutcome& out = outcomes[c];
      out.projection.weights = init_matrix(d, cluster_seed(config.seed, c, 0), config.init_std);
      if (config.bias) out.projection.bias = Vector::Zero(static_cast<Eigen::Index>(d));
      const auto& pool = pools[c];
      if (pool.empty()) {
        log::warn("cluster " + std::to_string(c) + " has no training pairs; keeping its initialization");
        continue;
      }

      std::mt19937_64 shuffle_rng(cluster_seed(config.seed, c, 1));
      std::mt19937_64 negative_rng(cluster_seed(config.seed, c, 2));
      AdamState weight_state(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      AdamState bias_state(1, static_cast<Eigen::Index>(d));
      Matrix bias_row;

      std::vector<std::size_t> order(pool.size());
      std::iota(order.begin(), order.end(), 0);
      // Row of the negative z for each pool member, redrawn every epoch.
      std::vector<std::size_t> negative(pool.size());

      double best_hit = -1.0;
      Projection best = out.projection;
      for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        if (neighbors) {
          for (std::size_t j = 0; j < pool.size(); ++j) {
            const std::size_t src = train_rows.source[pool[j]];
            const std::string z = sample_negative(dataset, table.word(src), negative_rng);
            negative[j] = table.lookup(z).value_or(src);
          }
        }

        LossTerms epoch_loss;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
          const std::size_t stop = std::min(order.size(), start + config.batch_size);
          const auto n = static_cast<Eigen::Index>(stop - start);
          Matrix x(n, static_cast<Eigen::Index>(d));
          Matrix y(n, static_cast<Eigen::Index>(d));
          Matrix z;
          if (neighbors) z.resize(n, static_cast<Eigen::Index>(d));
          for (std::size_t r = start; r < stop; ++r) {
            const std::size_t j = order[r];
            const auto row = static_cast<Eigen::Index>(r - start);
            x.row(row) = table.row(train_rows.source[pool[j]]);
            y.row(row) = table.row(train_rows.target[pool[j]]);
            if (neighbors) z.row(row) = table.row(negative[j]);
          }
          const Batch batch{x, y, neighbors ? &z : nullptr};
          const LossAndGradient lg = loss_and_gradient(out.projection, batch, objective);
          const bool finite = lg.gradient.weights.allFinite() &&
                              (!config.bias || lg.gradient.bias.allFinite()) && std::isfinite(lg.loss.total);
          if (!finite) {
            throw NumericError("non-finite loss or gradient in cluster " + std::to_string(c) + " at epoch " +
                               std::to_string(epoch));
          }
          adam_step(out.projection.weights, lg.gradient.weights, weight_state, config.adam);
          if (config.bias) {
            bias_row = out.projection.bias;
            adam_step(bias_row, Matrix(lg.gradient.bias), bias_state, config.adam);
            out.projection.bias = bias_row.row(0);
          }
          const double w = static_cast<double>(n);
          epoch_loss.baseline += w * lg.loss.baseline;
          epoch_loss.regularizer += w * lg.loss.regularizer;
          epoch_loss.total += w * lg.loss.total;
        }
        const double count = static_cast<double>(pool.size());
        out.trace.push_back({epoch, c,
                             {epoch_loss.baseline / count, epoch_loss.regularizer / count, epoch_loss.total / count}});

        if (select_best && !val_members[c].empty() &&
            (epoch % config.validation_interval == 0 || epoch == config.epochs)) {
          const double hit = cluster_hit_at_10(out.projection, table, val_rows, val_members[c], config.nn_similarity);
          if (hit > best_hit) {
            best_hit = hit;
            best = out.projection;
            out.selected_epoch = epoch;
          }
        }
      }
      out.steps = weight_state.t;
      if (select_best && best_hit >= 0.0) {
        out.projection = best;
      } else {
        out.selected_epoch = config.epochs;
      }

      Matrix x = gather(table, [&] {
        std::vector<std::size_t> rows;
        for (const std::size_t i : pool) rows.push_back(train_rows.source[i]);
        return rows;
      }());
      Matrix y = gather(table, [&] {
        std::vector<std::size_t> rows;
        for (const std::size_t i : pool) rows.push_back(train_rows.target[i]);
        return rows;
      }());
      Matrix z;
      if (neighbors) z = gather(table, negative);
      out.final_loss = total_loss(out.projection, Batch{x, y, neighbors ? &z : nullptr}, objective);
    }
  });

  TrainResult result;
  ProjectionModel& model = result.model;
  model.clusters = clusters;
  model.objective = objective;
  model.vocab_hash = table.vocab_hash();
  TrainingMeta& meta = model.meta;
  meta.seed = config.seed;
  meta.epochs = config.epochs;
  meta.batch_size = config.batch_size;
  meta.init_std = config.init_std;
  meta.adam_alpha = config.adam.alpha;
  meta.adam_beta1 = config.adam.beta1;
  meta.adam_beta2 = config.adam.beta2;
  meta.adam_epsilon = config.adam.epsilon;
  meta.select_on = std::string(select_on_name(config.select_on));
  for (std::size_t c = 0; c < k; ++c) {
    model.projections.push_back(std::move(outcomes[c].projection));
    meta.train_pairs.push_back(pools[c].size());
    meta.steps.push_back(outcomes[c].steps);
    meta.selected_epoch.push_back(outcomes[c].selected_epoch);
    meta.final_loss.push_back(outcomes[c].final_loss);
    result.trace.insert(result.trace.end(), outcomes[c].trace.begin(), outcomes[c].trace.end());
  }
  return result;
}

TrainResult train(const RelationDataset& dataset, const EmbeddingTable& table, const TrainConfig& config) {
  config.validate();
  const auto train_pairs = dataset.bucket(Bucket::train);
  KMeansOptions options;
  options.k = config.k;
  options.seed = config.seed;
  options.threads = config.threads;
  const ClusterModel clusters = fit_kmeans(offsets(train_pairs, table), options);
  return train(dataset, table, clusters, config);
}

namespace {

void append_number(std::string& out, double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  out.append(buf.data(), res.ptr);
}

}  // namespace

void write_loss_trace(const std::vector<EpochLoss>& trace, const std::filesystem::path& path) {
  std::string out = "epoch,cluster,baseline_term,reg_term,total\n";
  for (const auto& row : trace) {
    out += std::to_string(row.epoch) + "," + std::to_string(row.cluster) + ",";
    append_number(out, row.loss.baseline);
    out.push_back(',');
    append_number(out, row.loss.regularizer);
    out.push_back(',');
    append_number(out, row.loss.total);
    out.push_back('\n');
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InputError("cannot write " + path.string());
  file << out;
}

}  // namespace hyperproj
