#include "hyperproj/embeddings.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "hyperproj/error.hpp"
#include "hyperproj/hashing.hpp"
#include "hyperproj/log.hpp"
#include "hyperproj/parallel.hpp"

namespace hyperproj {

std::optional<EmbeddingFormat> parse_embedding_format(std::string_view name) {
  if (name == "text") return EmbeddingFormat::text;
  if (name == "binary") return EmbeddingFormat::binary;
  return std::nullopt;
}

std::optional<Similarity> parse_similarity(std::string_view name) {
  if (name == "cosine") return Similarity::cosine;
  if (name == "dot") return Similarity::dot;
  return std::nullopt;
}

EmbeddingTable::EmbeddingTable(std::vector<std::string> vocab, RowMatrix vectors, bool normalize)
    : vocab_(std::move(vocab)), vectors_(std::move(vectors)), normalized_(normalize) {
  if (static_cast<Eigen::Index>(vocab_.size()) != vectors_.rows()) {
    throw InputError("embedding table: " + std::to_string(vocab_.size()) + " words but " +
                     std::to_string(vectors_.rows()) + " rows");
  }
  if (!vocab_.empty() && vectors_.cols() == 0) throw InputError("embedding table: zero dimension");
  if (!vectors_.allFinite()) throw InputError("embedding table: non-finite entry");
  index_.reserve(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], i).second) {
      throw InputError("embedding table: duplicate word '" + vocab_[i] + "'");
    }
  }
  norms_ = vectors_.rowwise().norm();
  if (normalize) {
    for (Eigen::Index i = 0; i < vectors_.rows(); ++i) {
      if (norms_[i] == 0.0) {
        throw InputError("embedding table: zero vector for '" + vocab_[static_cast<std::size_t>(i)] +
                         "' cannot be normalized");
      }
      vectors_.row(i) /= norms_[i];
    }
    norms_ = vectors_.rowwise().norm();
  }
}

std::optional<std::size_t> EmbeddingTable::lookup(std::string_view word) const {
  const auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vector EmbeddingTable::vector_of(std::string_view word) const {
  const auto i = lookup(word);
  if (!i) throw InputError("word not in vocabulary: '" + std::string(word) + "'");
  return vectors_.row(static_cast<Eigen::Index>(*i));
}

std::string EmbeddingTable::vocab_hash() const {
  std::string joined;
  for (const auto& w : vocab_) {
    joined += w;
    joined.push_back('\n');
  }
  return sha256_hex(joined);
}

namespace {

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open embeddings file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

struct RowBuffer {
  std::vector<std::string> words;
  std::vector<double> values;
  std::unordered_set<std::string> seen;
  std::size_t duplicates = 0;

  // Returns false for a duplicate word (ignored).
  bool add_word(std::string_view word) {
    if (!seen.emplace(word).second) {
      ++duplicates;
      log::warn("duplicate embedding for '" + std::string(word) + "', keeping the first");
      return false;
    }
    words.emplace_back(word);
    return true;
  }

  EmbeddingTable finish(std::size_t dim, bool normalize) {
    RowMatrix m(static_cast<Eigen::Index>(words.size()), static_cast<Eigen::Index>(dim));
    std::copy(values.begin(), values.end(), m.data());
    return EmbeddingTable(std::move(words), std::move(m), normalize);
  }
};

EmbeddingTable load_text(const std::string& content, const std::filesystem::path& path,
                         bool normalize) {
  RowBuffer rows;
  std::size_t dim = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool first = true;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    const std::string_view line(content.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (first) {
      first = false;
      std::size_t count = 0;
      std::size_t header_dim = 0;
      if (tokens.size() == 2 && parse_number(tokens[0], count) && parse_number(tokens[1], header_dim)) {
        if (header_dim == 0) throw InputError(where + ": header declares zero dimension");
        dim = header_dim;
        continue;
      }
    }
    if (tokens.size() < 2) throw InputError(where + ": expected a word followed by values");
    const std::size_t row_dim = tokens.size() - 1;
    if (dim == 0) dim = row_dim;
    if (row_dim != dim) {
      throw InputError(where + ": dimension mismatch, expected " + std::to_string(dim) + " values, got " +
                       std::to_string(row_dim));
    }
    if (!rows.add_word(tokens[0])) continue;
    for (std::size_t j = 1; j < tokens.size(); ++j) {
      double v = 0.0;
      if (!parse_number(tokens[j], v)) {
        throw InputError(where + ": cannot parse value '" + std::string(tokens[j]) + "'");
      }
      if (!std::isfinite(v)) throw InputError(where + ": non-finite value");
      rows.values.push_back(v);
    }
  }
  if (rows.words.empty()) throw InputError(path.string() + ": no embeddings found");
  return rows.finish(dim, normalize);
}

float read_le_float(const char* p) {
  std::uint32_t bits = 0;
  std::memcpy(&bits, p, sizeof bits);
  if constexpr (std::endian::native == std::endian::big) {
    bits = ((bits & 0xff) << 24) | ((bits & 0xff00) << 8) | ((bits >> 8) & 0xff00) | (bits >> 24);
  }
  float f = 0.0f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

void append_le_float(std::string& out, float f) {
  std::uint32_t bits = 0;
  std::memcpy(&bits, &f, sizeof bits);
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((bits >> shift) & 0xff));
}

EmbeddingTable load_binary(const std::string& content, const std::filesystem::path& path,
                           bool normalize) {
  const std::size_t eol = content.find('\n');
  if (eol == std::string::npos) throw InputError(path.string() + ": missing binary header");
  const auto header = split_ws(std::string_view(content).substr(0, eol));
  std::size_t count = 0;
  std::size_t dim = 0;
  if (header.size() != 2 || !parse_number(header[0], count) || !parse_number(header[1], dim) || dim == 0) {
    throw InputError(path.string() + ": malformed binary header");
  }
  RowBuffer rows;
  std::size_t pos = eol + 1;
  for (std::size_t i = 0; i < count; ++i) {
    const std::string where = path.string() + ": entry " + std::to_string(i + 1);
    while (pos < content.size() && (content[pos] == '\n' || content[pos] == ' ' || content[pos] == '\r')) {
      ++pos;
    }
    const std::size_t space = content.find(' ', pos);
    if (space == std::string::npos || space == pos) throw InputError(where + ": truncated word");
    const std::string_view word(content.data() + pos, space - pos);
    pos = space + 1;
    if (pos + dim * 4 > content.size()) throw InputError(where + ": truncated vector");
    const bool keep = rows.add_word(word);
    for (std::size_t j = 0; j < dim; ++j) {
      const float v = read_le_float(content.data() + pos + 4 * j);
      if (!std::isfinite(v)) throw InputError(where + ": non-finite value");
      if (keep) rows.values.push_back(static_cast<double>(v));
    }
    pos += dim * 4;
  }
  if (rows.words.empty()) throw InputError(path.string() + ": no embeddings found");
  return rows.finish(dim, normalize);
}

}  // namespace

EmbeddingTable load_embeddings(const std::filesystem::path& path, EmbeddingFormat format,
                               bool normalize) {
  const std::string content = read_all(path);
  if (content.empty()) throw InputError(path.string() + ": empty embeddings file");
  return format == EmbeddingFormat::text ? load_text(content, path, normalize)
                                         : load_binary(content, path, normalize);
}

void write_embeddings_text(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::string out = std::to_string(table.size()) + " " + std::to_string(table.dim()) + "\n";
  std::array<char, 64> buf{};
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += table.word(i);
    const auto row = table.row(i);
    for (Eigen::Index j = 0; j < row.size(); ++j) {
      const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), row[j],
                                     std::chars_format::general, 9);
      out.push_back(' ');
      out.append(buf.data(), res.ptr);
    }
    out.push_back('\n');
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InputError("cannot write " + path.string());
  file << out;
}

void write_embeddings_binary(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::string out = std::to_string(table.size()) + " " + std::to_string(table.dim()) + "\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += table.word(i);
    out.push_back(' ');
    const auto row = table.row(i);
    for (Eigen::Index j = 0; j < row.size(); ++j) append_le_float(out, static_cast<float>(row[j]));
    out.push_back('\n');
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InputError("cannot write " + path.string());
  file << out;
}

double similarity_score(const EmbeddingTable& table, std::size_t index, const Vector& query,
                        double query_norm, Similarity similarity) {
  const double dot = table.row(index).dot(query);
  if (similarity == Similarity::dot) return dot;
  const double norm = table.norms()[static_cast<Eigen::Index>(index)];
  return dot / (norm * query_norm);
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingTable& table, const Vector& query,
                                        const NeighborQuery& options) {
  if (options.l == 0) throw InputError("nearest_neighbors: l must be at least 1");
  if (static_cast<std::size_t>(query.size()) != table.dim()) {
    throw InputError("nearest_neighbors: query has dimension " + std::to_string(query.size()) +
                     ", table has " + std::to_string(table.dim()));
  }
  const double query_norm = query.norm();
  if (query_norm == 0.0) throw NumericError("nearest_neighbors: zero query vector");
  if (!std::isfinite(query_norm)) throw NumericError("nearest_neighbors: non-finite query vector");

  const std::size_t n = table.size();
  std::vector<double> scores(n);
  parallel_for(n, options.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      scores[i] = similarity_score(table, i, query, query_norm, options.similarity);
    }
  });

  std::vector<std::size_t> candidates;
  candidates.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (options.exclude && *options.exclude == i) continue;
    if (options.similarity == Similarity::cosine && table.norms()[static_cast<Eigen::Index>(i)] == 0.0) {
      continue;
    }
    candidates.push_back(i);
  }
  const std::size_t take = std::min(options.l, candidates.size());
  const auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                    candidates.end(), better);

  std::vector<Neighbor> result;
  result.reserve(take);
  for (std::size_t r = 0; r < take; ++r) {
    const std::size_t i = candidates[r];
    result.push_back({i, table.word(i), scores[i]});
  }
  return result;
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingTable& table, const Vector& query,
                                        std::size_t l, std::optional<std::string_view> exclude,
                                        Similarity similarity) {
  NeighborQuery options;
  options.l = l;
  options.similarity = similarity;
  if (exclude) options.exclude = table.lookup(*exclude);
  return nearest_neighbors(table, query, options);
}

}  // namespace hyperproj
