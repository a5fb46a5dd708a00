#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperproj/dataset.hpp"
#include "hyperproj/embeddings.hpp"
#include "hyperproj/projection.hpp"

namespace hyperproj {

struct EvalOptions {
  std::size_t l_max = 10;
  // Drop the hyponym from its own candidate list.
  bool exclude_query = true;
  Similarity similarity = Similarity::cosine;
  unsigned threads = 1;
};

struct PairResult {
  std::string hyponym;
  std::string gold;
  std::size_t cluster = 0;
  // 1-based rank of the gold word within the top l_max, if present.
  std::optional<std::size_t> rank;
};

struct EvalReport {
  std::vector<double> hits;  // hit@1 .. hit@l_max
  double auc = 0.0;
  std::size_t l_max = 0;
  std::vector<PairResult> per_pair;
  std::size_t n_pairs = 0;
  std::size_t skips = 0;
};

struct HitScore {
  double value = 0.0;
  std::size_t n_pairs = 0;
  std::size_t skips = 0;
};

// Trapezoid sum 0.5 * sum_{i=1}^{l-1} (hit@i + hit@(i+1)). Throws InputError
// for fewer than two points.
double auc(std::span<const double> hits);

// Fraction of pairs whose gold hypernym is among the l nearest neighbors of
// the projected hyponym. The cluster comes from the gold offset. A zero
// projection counts as a miss; pairs with unknown words are skipped.
HitScore hit_at(const ProjectionModel& model, const EmbeddingTable& table,
                const std::vector<RelationPair>& pairs, std::size_t l,
                const EvalOptions& options = {});

// hit@1..hit@l_max from one neighbor pass per pair, AUC and per-pair ranks.
EvalReport evaluate(const ProjectionModel& model, const EmbeddingTable& table,
                    const std::vector<RelationPair>& pairs, const EvalOptions& options = {});

// Candidates for an unseen hyponym: every projection is applied, the
// neighbor lists are merged and each word keeps its best score.
std::vector<Neighbor> predict_hypernyms(const ProjectionModel& model, const EmbeddingTable& table,
                                        std::string_view hyponym, std::size_t l,
                                        const EvalOptions& options = {});

std::string report_json(const EvalReport& report, const std::string& config_echo_json = "{}");
void write_report_json(const EvalReport& report, const std::filesystem::path& path,
                       const std::string& config_echo_json = "{}");
// `hyponym<TAB>gold<TAB>cluster<TAB>rank`, rank `-` when absent.
void write_per_pair_tsv(const EvalReport& report, const std::filesystem::path& path);

}  // namespace hyperproj
