#include "hyperproj/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "hyperproj/error.hpp"
#include "hyperproj/parallel.hpp"

namespace hyperproj {

double auc(std::span<const double> hits) {
  if (hits.size() < 2) throw InputError("AUC needs at least two hit@l points");
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < hits.size(); ++i) sum += hits[i] + hits[i + 1];
  return 0.5 * sum;
}

namespace {

struct Ranked {
  bool skipped = true;
  std::size_t cluster = 0;
  std::optional<std::size_t> rank;
};

// Rank of the gold hypernym within the top l neighbors of the projection.
Ranked rank_pair(const ProjectionModel& model, const EmbeddingTable& table, const RelationPair& pair,
                 std::size_t l, const EvalOptions& options) {
  Ranked out;
  const auto source = table.lookup(pair.source);
  const auto target = table.lookup(pair.target);
  if (!source || !target) return out;
  out.skipped = false;
  const Vector x = table.row(*source);
  out.cluster = assign_cluster(model.clusters, Vector(table.row(*target)) - x);
  const Vector projected = predict(model, x, out.cluster);
  NeighborQuery query;
  query.l = l;
  query.similarity = options.similarity;
  if (options.exclude_query) query.exclude = *source;
  try {
    const auto nn = nearest_neighbors(table, projected, query);
    for (std::size_t r = 0; r < nn.size(); ++r) {
      if (nn[r].index == *target) {
        out.rank = r + 1;
        break;
      }
    }
  } catch (const NumericError&) {
    // Similarity to a zero projection is undefined: counted as a miss.
  }
  return out;
}

std::vector<Ranked> rank_all(const ProjectionModel& model, const EmbeddingTable& table,
                             const std::vector<RelationPair>& pairs, std::size_t l, const EvalOptions& options) {
  if (l == 0) throw InputError("l must be at least 1");
  if (pairs.empty()) throw InputError("no pairs to evaluate");
  if (model.dim() != table.dim()) throw InputError("model dimension does not match the embeddings");
  std::vector<Ranked> ranked(pairs.size());
  parallel_for(pairs.size(), options.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) ranked[i] = rank_pair(model, table, pairs[i], l, options);
  });
  return ranked;
}

}  // namespace

HitScore hit_at(const ProjectionModel& model, const EmbeddingTable& table, const std::vector<RelationPair>& pairs,
                std::size_t l, const EvalOptions& options) {
  HitScore score;
  std::size_t matches = 0;
  for (const auto& r : rank_all(model, table, pairs, l, options)) {
    if (r.skipped) {
      ++score.skips;
      continue;
    }
    ++score.n_pairs;
    if (r.rank) ++matches;
  }
  if (score.n_pairs > 0) score.value = static_cast<double>(matches) / static_cast<double>(score.n_pairs);
  return score;
}

EvalReport evaluate(const ProjectionModel& model, const EmbeddingTable& table, const std::vector<RelationPair>& pairs,
                    const EvalOptions& options) {
  if (options.l_max < 2) throw InputError("l_max must be at least 2");
  const auto ranked = rank_all(model, table, pairs, options.l_max, options);
  EvalReport report;
  report.l_max = options.l_max;
  std::vector<std::size_t> at_rank(options.l_max + 1, 0);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& r = ranked[i];
    if (r.skipped) {
      ++report.skips;
      continue;
    }
    ++report.n_pairs;
    if (r.rank) ++at_rank[*r.rank];
    report.per_pair.push_back({pairs[i].source, pairs[i].target, r.cluster, r.rank});
  }
  report.hits.assign(options.l_max, 0.0);
  std::size_t cumulative = 0;
  for (std::size_t l = 1; l <= options.l_max; ++l) {
    cumulative += at_rank[l];
    if (report.n_pairs > 0) {
      report.hits[l - 1] = static_cast<double>(cumulative) / static_cast<double>(report.n_pairs);
    }
  }
  report.auc = auc(report.hits);
  return report;
}

std::vector<Neighbor> predict_hypernyms(const ProjectionModel& model, const EmbeddingTable& table,
                                        std::string_view hyponym, std::size_t l, const EvalOptions& options) {
  const auto source = table.lookup(hyponym);
  if (!source) throw InputError("word not in vocabulary: '" + std::string(hyponym) + "'");
  if (model.dim() != table.dim()) throw InputError("model dimension does not match the embeddings");
  const Vector x = table.row(*source);
  NeighborQuery query;
  query.l = l;
  query.similarity = options.similarity;
  query.threads = options.threads;
  if (options.exclude_query) query.exclude = *source;

  std::map<std::size_t, double> best;
  for (std::size_t c = 0; c < model.k(); ++c) {
    std::vector<Neighbor> nn;
    try {
      nn = nearest_neighbors(table, predict(model, x, c), query);
    } catch (const NumericError&) {
      continue;
    }
    for (const auto& n : nn) {
      const auto [it, fresh] = best.emplace(n.index, n.score);
      if (!fresh) it->second = std::max(it->second, n.score);
    }
  }
  std::vector<Neighbor> merged;
  merged.reserve(best.size());
  for (const auto& [index, score] : best) merged.push_back({index, table.word(index), score});
  std::sort(merged.begin(), merged.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  });
  if (merged.size() > l) merged.resize(l);
  return merged;
}

std::string report_json(const EvalReport& report, const std::string& config_echo_json) {
  nlohmann::ordered_json j;
  j["hits"] = report.hits;
  j["auc"] = report.auc;
  j["l_max"] = report.l_max;
  j["n_pairs"] = report.n_pairs;
  j["skips"] = report.skips;
  j["config"] = nlohmann::ordered_json::parse(config_echo_json);
  return j.dump(2) + "\n";
}

void write_report_json(const EvalReport& report, const std::filesystem::path& path,
                       const std::string& config_echo_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << report_json(report, config_echo_json);
}

void write_per_pair_tsv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& p : report.per_pair) {
    out << p.hyponym << '\t' << p.gold << '\t' << p.cluster << '\t';
    if (p.rank) {
      out << *p.rank;
    } else {
      out << '-';
    }
    out << '\n';
  }
}

}  // namespace hyperproj
