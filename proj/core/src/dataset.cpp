#include "hyperproj/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "hyperproj/error.hpp"
#include "hyperproj/log.hpp"

namespace hyperproj {

std::optional<Relation> parse_relation(std::string_view label) {
  if (label == "hypernym") return Relation::hypernym;
  if (label == "synonym") return Relation::synonym;
  if (label == "cohyponym") return Relation::cohyponym;
  return std::nullopt;
}

std::string_view relation_name(Relation relation) {
  switch (relation) {
    case Relation::hypernym: return "hypernym";
    case Relation::synonym: return "synonym";
    case Relation::cohyponym: return "cohyponym";
  }
  return "hypernym";
}

RelationFile parse_relations(std::string_view text) {
  RelationFile out;
  std::set<std::tuple<std::string, std::string, Relation>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    const std::string where = "line " + std::to_string(line_no);
    if (cols.size() < 3) throw InputError(where + ": expected 3 tab-separated columns, got " + std::to_string(cols.size()));
    if (cols[0].empty() || cols[1].empty()) throw InputError(where + ": empty word");
    const auto relation = parse_relation(cols[2]);
    if (!relation) throw InputError(where + ": unknown relation '" + std::string(cols[2]) + "'");
    if (cols[0] == cols[1]) throw InputError(where + ": source equals target ('" + std::string(cols[0]) + "')");

    RelationPair pair{std::string(cols[0]), std::string(cols[1]), *relation};
    if (!seen.emplace(pair.source, pair.target, pair.relation).second) {
      ++out.duplicates;
      continue;
    }
    out.pairs.push_back(std::move(pair));
  }
  return out;
}

RelationFile load_relations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open relations file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    auto file = parse_relations(buffer.str());
    if (file.duplicates > 0) {
      log::info(path.string() + ": dropped " + std::to_string(file.duplicates) + " duplicate lines");
    }
    return file;
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_relations(const std::vector<RelationPair>& pairs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& p : pairs) out << p.source << '\t' << p.target << '\t' << relation_name(p.relation) << '\n';
}

BindResult bind_to_vocabulary(const std::vector<RelationPair>& pairs, const EmbeddingTable& table) {
  BindResult out;
  for (const auto& p : pairs) {
    if (table.contains(p.source) && table.contains(p.target)) {
      out.pairs.push_back(p);
    } else {
      ++out.dropped;
    }
  }
  return out;
}

std::string_view bucket_name(Bucket bucket) {
  switch (bucket) {
    case Bucket::train: return "train";
    case Bucket::validation: return "validation";
    case Bucket::test: return "test";
  }
  return "train";
}

std::optional<Bucket> parse_bucket(std::string_view name) {
  if (name == "train") return Bucket::train;
  if (name == "validation") return Bucket::validation;
  if (name == "test") return Bucket::test;
  return std::nullopt;
}

void SplitFractions::validate() const {
  if (!(train > 0.0) || !(validation > 0.0) || !(test > 0.0)) {
    throw InputError("split fractions must all be positive");
  }
  const double sum = train + validation + test;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InputError("split fractions must sum to 1 (got " + std::to_string(sum) + ")");
  }
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

SplitAssignment lexical_split(const std::vector<RelationPair>& pairs, const SplitFractions& fractions,
                              std::uint64_t seed) {
  fractions.validate();
  std::unordered_map<std::string_view, std::size_t> word_ids;
  auto id_of = [&](const std::string& w) { return word_ids.emplace(w, word_ids.size()).first->second; };
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  edges.reserve(pairs.size());
  for (const auto& p : pairs) edges.emplace_back(id_of(p.source), id_of(p.target));

  DisjointSets sets(word_ids.size());
  for (const auto& [a, b] : edges) sets.unite(a, b);

  // Components in order of first appearance, each holding its pair indices.
  std::unordered_map<std::size_t, std::size_t> component_of_root;
  std::vector<std::vector<std::size_t>> components;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::size_t root = sets.find(edges[i].first);
    const auto [it, fresh] = component_of_root.emplace(root, components.size());
    if (fresh) components.emplace_back();
    components[it->second].push_back(i);
  }

  std::mt19937_64 rng(seed);
  std::shuffle(components.begin(), components.end(), rng);

  const double n = static_cast<double>(pairs.size());
  const std::array<double, 3> target{fractions.train * n, fractions.validation * n, fractions.test * n};
  const double largest = *std::max_element(target.begin(), target.end());
  std::array<std::size_t, 3> filled{0, 0, 0};
  SplitAssignment split(pairs.size(), Bucket::train);
  for (const auto& component : components) {
    if (static_cast<double>(component.size()) > largest) {
      log::warn("lexical split: a connected component of " + std::to_string(component.size()) +
                " pairs exceeds the largest bucket target; fractions will be approximate");
    }
    std::size_t best = 0;
    for (std::size_t b = 1; b < 3; ++b) {
      if (static_cast<double>(filled[b]) / target[b] < static_cast<double>(filled[best]) / target[best]) best = b;
    }
    filled[best] += component.size();
    for (const std::size_t i : component) split[i] = static_cast<Bucket>(best);
  }
  return split;
}

RelationDataset::RelationDataset(std::vector<RelationPair> positives, SplitAssignment split,
                                 const std::vector<RelationPair>& negative_pairs,
                                 const EmbeddingTable* table)
    : positives_(std::move(positives)), split_(std::move(split)) {
  if (positives_.size() != split_.size()) {
    throw InputError("dataset: split has " + std::to_string(split_.size()) + " entries for " +
                     std::to_string(positives_.size()) + " positive pairs");
  }
  for (const auto& p : positives_) {
    if (p.relation != Relation::hypernym) throw InputError("dataset: positive pair is not a hypernym pair");
  }
  std::unordered_set<std::string_view> train_words;
  std::unordered_set<std::string_view> held_out;
  for (std::size_t i = 0; i < positives_.size(); ++i) {
    auto& set = split_[i] == Bucket::train ? train_words : held_out;
    set.insert(positives_[i].source);
    set.insert(positives_[i].target);
  }
  std::size_t dropped = 0;
  for (const auto& p : negative_pairs) {
    if (p.relation == Relation::hypernym) continue;
    const bool usable = train_words.contains(p.source) && !held_out.contains(p.target) &&
                        (table == nullptr || (table->contains(p.source) && table->contains(p.target)));
    if (!usable) {
      ++dropped;
      continue;
    }
    negative_pairs_.push_back(p);
    auto& list = negatives_[p.source];
    if (std::find(list.begin(), list.end(), p.target) == list.end()) list.push_back(p.target);
  }
  if (dropped > 0) {
    log::debug("dataset: " + std::to_string(dropped) + " negative pairs unused outside the training vocabulary");
  }
}

std::vector<RelationPair> RelationDataset::bucket(Bucket b) const {
  std::vector<RelationPair> out;
  for (std::size_t i = 0; i < positives_.size(); ++i) {
    if (split_[i] == b) out.push_back(positives_[i]);
  }
  return out;
}

std::vector<std::string> RelationDataset::vocabulary(Bucket b) const {
  std::set<std::string> words;
  for (std::size_t i = 0; i < positives_.size(); ++i) {
    if (split_[i] != b) continue;
    words.insert(positives_[i].source);
    words.insert(positives_[i].target);
  }
  return {words.begin(), words.end()};
}

const std::vector<std::string>& RelationDataset::negatives_of(std::string_view source) const {
  static const std::vector<std::string> kEmpty;
  const auto it = negatives_.find(source);
  return it == negatives_.end() ? kEmpty : it->second;
}

std::string sample_negative(const RelationDataset& dataset, std::string_view source, std::mt19937_64& rng) {
  const auto& candidates = dataset.negatives_of(source);
  if (candidates.empty()) return std::string(source);
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  return candidates[pick(rng)];
}

void write_split_manifest(const std::vector<RelationPair>& positives, const SplitAssignment& split,
                          const std::filesystem::path& path) {
  if (positives.size() != split.size()) throw InputError("split manifest: size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (std::size_t i = 0; i < positives.size(); ++i) {
    out << positives[i].source << '\t' << positives[i].target << '\t' << bucket_name(split[i]) << '\n';
  }
}

}  // namespace hyperproj
