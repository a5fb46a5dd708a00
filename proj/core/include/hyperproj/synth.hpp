#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "hyperproj/dataset.hpp"
#include "hyperproj/embeddings.hpp"
#include "hyperproj/projection.hpp"

namespace hyperproj {

struct SynthOptions {
  std::size_t dim = 10;
  std::size_t pairs = 1000;
  // Standard deviation of the Gaussian added to each hypernym coordinate.
  double noise = 0.0;
  // Synonym distractors per hyponym.
  std::size_t distractors = 0;
  // Distractors lie within this angle of their hyponym.
  double distractor_angle_deg = 15.0;
  std::size_t planted_clusters = 1;
  // Unset: each planted map is a Haar-random orthogonal matrix. Set: it
  // rotates by this angle in d/2 random orthogonal planes.
  std::optional<double> rotation_deg;
  // Extra random words added to the vocabulary.
  std::size_t filler = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthFixture {
  std::vector<std::string> words;
  RowMatrix vectors;
  std::vector<RelationPair> relations;
  std::vector<Matrix> planted;  // one mixing matrix per planted cluster

  EmbeddingTable table(bool normalize = false) const { return EmbeddingTable(words, vectors, normalize); }
};

// Unit hyponyms x, hypernyms y = x A_c + noise with A_c orthogonal, and
// distractor synonyms near each hyponym. Pairs are dealt to planted clusters
// round-robin.
SynthFixture make_synthetic(const SynthOptions& options);

// Writes embeddings.txt and relations.tsv into dir.
void write_synthetic(const SynthFixture& fixture, const std::filesystem::path& dir);

}  // namespace hyperproj
