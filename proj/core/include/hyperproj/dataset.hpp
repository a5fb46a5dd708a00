#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "hyperproj/embeddings.hpp"

namespace hyperproj {

enum class Relation { hypernym, synonym, cohyponym };

std::optional<Relation> parse_relation(std::string_view label);
std::string_view relation_name(Relation relation);

struct RelationPair {
  std::string source;
  std::string target;
  Relation relation = Relation::hypernym;

  friend bool operator==(const RelationPair&, const RelationPair&) = default;
};

struct RelationFile {
  std::vector<RelationPair> pairs;
  std::size_t duplicates = 0;
};

// Parses `source<TAB>target<TAB>relation` lines; `#` lines and blank lines
// are skipped. Exact duplicates are dropped and counted. Throws InputError
// naming the line for short rows, unknown labels, or source == target.
RelationFile load_relations(const std::filesystem::path& path);
RelationFile parse_relations(std::string_view text);

void write_relations(const std::vector<RelationPair>& pairs, const std::filesystem::path& path);

struct BindResult {
  std::vector<RelationPair> pairs;
  std::size_t dropped = 0;
};

// Drops pairs whose words are missing from the table.
BindResult bind_to_vocabulary(const std::vector<RelationPair>& pairs, const EmbeddingTable& table);

enum class Bucket : std::uint8_t { train = 0, validation = 1, test = 2 };

std::string_view bucket_name(Bucket bucket);
std::optional<Bucket> parse_bucket(std::string_view name);

struct SplitFractions {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;

  // Throws InputError unless all three are positive and sum to 1 within 1e-9.
  void validate() const;
};

// Bucket of each input pair, aligned with the input order.
using SplitAssignment = std::vector<Bucket>;

// Groups pairs into connected components of the word graph, shuffles the
// components with the seed, and places each whole component into the bucket
// that is least filled relative to its target pair count. Words never cross
// buckets.
SplitAssignment lexical_split(const std::vector<RelationPair>& pairs, const SplitFractions& fractions,
                              std::uint64_t seed);

// Positive pairs with their split plus the training negatives.
class RelationDataset {
 public:
  RelationDataset() = default;

  // Keeps hypernym pairs as positives (split aligned with them). Non-hypernym
  // pairs become negatives when their source is a training word and their
  // target is not a validation or test word. If a table is given, negatives
  // outside its vocabulary are dropped too.
  RelationDataset(std::vector<RelationPair> positives, SplitAssignment split,
                  const std::vector<RelationPair>& negative_pairs,
                  const EmbeddingTable* table = nullptr);

  const std::vector<RelationPair>& positives() const { return positives_; }
  const SplitAssignment& split() const { return split_; }
  const std::map<std::string, std::vector<std::string>, std::less<>>& negatives() const {
    return negatives_;
  }

  std::vector<RelationPair> bucket(Bucket b) const;
  // All words appearing in the positive pairs of a bucket.
  std::vector<std::string> vocabulary(Bucket b) const;

  // The accepted negative pairs, in input order.
  const std::vector<RelationPair>& negative_pairs() const { return negative_pairs_; }

  // Negatives for `source`, or an empty list.
  const std::vector<std::string>& negatives_of(std::string_view source) const;

 private:
  std::vector<RelationPair> positives_;
  SplitAssignment split_;
  std::map<std::string, std::vector<std::string>, std::less<>> negatives_;
  std::vector<RelationPair> negative_pairs_;
};

// Uniform draw from the source's negatives. Falls back to the source itself
// when it has none.
std::string sample_negative(const RelationDataset& dataset, std::string_view source,
                            std::mt19937_64& rng);

// Split manifest rows: `source<TAB>target<TAB>bucket`.
void write_split_manifest(const std::vector<RelationPair>& positives, const SplitAssignment& split,
                          const std::filesystem::path& path);

}  // namespace hyperproj
