#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace hyperproj {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::RowVectorXd;

enum class EmbeddingFormat { text, binary };

enum class Similarity { cosine, dot };

std::optional<EmbeddingFormat> parse_embedding_format(std::string_view name);
std::optional<Similarity> parse_similarity(std::string_view name);

// Dense word vectors, one row per vocabulary entry. Immutable once built.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  // Takes ownership of the rows. Throws InputError on duplicate words,
  // row/vocab count mismatch, or non-finite entries. With normalize set,
  // rows are scaled to unit length and zero rows are rejected.
  EmbeddingTable(std::vector<std::string> vocab, RowMatrix vectors, bool normalize);

  std::size_t size() const { return vocab_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }
  bool normalized() const { return normalized_; }

  std::optional<std::size_t> lookup(std::string_view word) const;
  bool contains(std::string_view word) const { return lookup(word).has_value(); }

  const std::string& word(std::size_t index) const { return vocab_[index]; }
  const std::vector<std::string>& vocab() const { return vocab_; }

  // Row view; index must be < size().
  auto row(std::size_t index) const { return vectors_.row(static_cast<Eigen::Index>(index)); }
  // Row of a vocabulary word. Throws InputError if absent.
  Vector vector_of(std::string_view word) const;

  const RowMatrix& vectors() const { return vectors_; }
  // L2 norm of every row, cached at construction.
  const Eigen::VectorXd& norms() const { return norms_; }

  // Stable digest of vocabulary order and contents.
  std::string vocab_hash() const;

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };

  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> index_;
  RowMatrix vectors_;
  Eigen::VectorXd norms_;
  bool normalized_ = false;
};

// Reads the word2vec text (`word v1 .. vd`, optional `count dim` header) or
// binary layout. Duplicate words keep the first occurrence and log a warning.
EmbeddingTable load_embeddings(const std::filesystem::path& path, EmbeddingFormat format,
                               bool normalize);

// Text output prints 9 significant digits per value.
void write_embeddings_text(const EmbeddingTable& table, const std::filesystem::path& path);
// Binary output stores values as little-endian 32-bit floats.
void write_embeddings_binary(const EmbeddingTable& table, const std::filesystem::path& path);

struct Neighbor {
  std::size_t index = 0;
  std::string word;
  double score = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct NeighborQuery {
  std::size_t l = 10;
  std::optional<std::size_t> exclude;
  Similarity similarity = Similarity::cosine;
  unsigned threads = 1;
};

// Exhaustive top-l scan, ordered by descending score then ascending
// vocabulary index. Under cosine similarity zero rows are not candidates.
// Throws NumericError for a zero query and InputError for l == 0 or a
// dimension mismatch. Returns fewer than l entries when the usable
// vocabulary is smaller.
std::vector<Neighbor> nearest_neighbors(const EmbeddingTable& table, const Vector& query,
                                        const NeighborQuery& options);

// Convenience form taking an optional word to exclude.
std::vector<Neighbor> nearest_neighbors(const EmbeddingTable& table, const Vector& query,
                                        std::size_t l,
                                        std::optional<std::string_view> exclude = std::nullopt,
                                        Similarity similarity = Similarity::cosine);

// Similarity of query against one row. query_norm is ||query||.
double similarity_score(const EmbeddingTable& table, std::size_t index, const Vector& query,
                        double query_norm, Similarity similarity);

}  // namespace hyperproj
