#pragma once

#include <vector>

#include "hyperproj/dataset.hpp"
#include "hyperproj/synth.hpp"

// Splits the hypernym rows of a synthetic fixture lexically and keeps the
// other rows as negatives.
inline hyperproj::RelationDataset synthetic_dataset(const hyperproj::SynthFixture& fx,
                                                    const hyperproj::EmbeddingTable& table, std::uint64_t seed,
                                                    hyperproj::SplitFractions fractions = {}) {
  std::vector<hyperproj::RelationPair> positives;
  std::vector<hyperproj::RelationPair> negatives;
  for (const auto& p : fx.relations) {
    (p.relation == hyperproj::Relation::hypernym ? positives : negatives).push_back(p);
  }
  auto split = hyperproj::lexical_split(positives, fractions, seed);
  return hyperproj::RelationDataset(std::move(positives), std::move(split), negatives, &table);
}
