// hyperproj: split relations, cluster offsets, train per-cluster hypernym
// projections, evaluate them, predict hypernyms and generate synthetic data.

#include <array>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hyperproj/clustering.hpp"
#include "hyperproj/dataset.hpp"
#include "hyperproj/embeddings.hpp"
#include "hyperproj/error.hpp"
#include "hyperproj/evaluation.hpp"
#include "hyperproj/log.hpp"
#include "hyperproj/model_io.hpp"
#include "hyperproj/synth.hpp"
#include "hyperproj/training.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace hyperproj::cli {
namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Runs `write(tmp)` and renames tmp over path once it succeeds.
template <typename Fn>
void write_atomically(const fs::path& path, Fn&& write) {
  fs::path tmp = path;
  tmp += ".partial";
  try {
    write(tmp);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
  fs::rename(tmp, path);
}

struct EmbeddingArgs {
  std::string path;
  std::string format = "text";
  bool normalize = false;

  void add_to(CLI::App& app) {
    app.add_option("--embeddings", path, "Embedding file")->required();
    app.add_option("--format", format, "Embedding format")->check(CLI::IsMember({"text", "binary"}));
    app.add_flag("--normalize", normalize, "Scale embeddings to unit L2 norm");
  }

  EmbeddingTable load() const {
    return load_embeddings(path, *parse_embedding_format(format), normalize);
  }

  json echo() const { return {{"embeddings", path}, {"format", format}, {"normalize", normalize}}; }
};

std::vector<RelationPair> hypernyms_of(const std::vector<RelationPair>& pairs) {
  std::vector<RelationPair> out;
  for (const auto& p : pairs) {
    if (p.relation == Relation::hypernym) out.push_back(p);
  }
  return out;
}

// Positives from train.tsv and validation.tsv plus training negatives.
RelationDataset load_split_dir(const fs::path& dir, const EmbeddingTable& table, RunManifest& manifest) {
  const fs::path train_path = dir / "train.tsv";
  const fs::path val_path = dir / "validation.tsv";
  const auto train_file = load_relations(train_path);
  manifest.add_input(train_path);
  std::vector<RelationPair> validation;
  if (fs::exists(val_path)) {
    validation = hypernyms_of(load_relations(val_path).pairs);
    manifest.add_input(val_path);
  }
  const auto train_bound = bind_to_vocabulary(hypernyms_of(train_file.pairs), table);
  const auto val_bound = bind_to_vocabulary(validation, table);
  if (train_bound.dropped + val_bound.dropped > 0) {
    log::warn("dropped " + std::to_string(train_bound.dropped + val_bound.dropped) +
              " pairs with words outside the embeddings");
  }
  if (train_bound.pairs.empty()) throw InputError(train_path.string() + ": no usable training pairs");
  std::vector<RelationPair> positives = train_bound.pairs;
  SplitAssignment split(positives.size(), Bucket::train);
  positives.insert(positives.end(), val_bound.pairs.begin(), val_bound.pairs.end());
  split.resize(positives.size(), Bucket::validation);
  return RelationDataset(std::move(positives), std::move(split), train_file.pairs, &table);
}

SplitFractions parse_fractions(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("--fractions: cannot parse '" + item + "'");
    }
  }
  if (values.size() != 3) throw InputError("--fractions needs three comma-separated values (train,val,test)");
  SplitFractions f{values[0], values[1], values[2]};
  f.validate();
  return f;
}

// ---------------------------------------------------------------- split

struct SplitArgs {
  std::string relations;
  std::string fractions = "0.8,0.1,0.1";
  std::uint64_t seed = 0;
  std::string out;
  std::string embeddings_path;
};

int run_split(const SplitArgs& args) {
  RunManifest manifest("split");
  manifest.config() = {{"relations", args.relations}, {"fractions", args.fractions}, {"seed", args.seed}};
  const SplitFractions fractions = parse_fractions(args.fractions);

  manifest.stage("load");
  const auto file = load_relations(args.relations);
  manifest.add_input(args.relations);
  std::vector<RelationPair> positives = hypernyms_of(file.pairs);
  if (!args.embeddings_path.empty()) {
    const EmbeddingTable table = load_embeddings(args.embeddings_path, EmbeddingFormat::text, false);
    manifest.add_input(args.embeddings_path);
    const auto bound = bind_to_vocabulary(positives, table);
    if (bound.dropped > 0) log::warn("dropped " + std::to_string(bound.dropped) + " unresolvable pairs");
    positives = bound.pairs;
  }
  if (positives.empty()) throw InputError(args.relations + ": no hypernym pairs");

  manifest.stage("split");
  SplitAssignment split = lexical_split(positives, fractions, args.seed);
  const RelationDataset dataset(positives, split, file.pairs);

  manifest.stage("write");
  const fs::path out(args.out);
  fs::create_directories(out);
  std::vector<RelationPair> train = dataset.bucket(Bucket::train);
  train.insert(train.end(), dataset.negative_pairs().begin(), dataset.negative_pairs().end());
  const std::vector<std::pair<fs::path, std::vector<RelationPair>>> buckets{
      {out / "train.tsv", train},
      {out / "validation.tsv", dataset.bucket(Bucket::validation)},
      {out / "test.tsv", dataset.bucket(Bucket::test)},
  };
  for (const auto& [path, pairs] : buckets) {
    write_atomically(path, [&](const fs::path& tmp) { write_relations(pairs, tmp); });
    manifest.add_output(path);
  }
  const fs::path split_path = out / "split.tsv";
  write_atomically(split_path, [&](const fs::path& tmp) { write_split_manifest(positives, split, tmp); });
  manifest.add_output(split_path);

  std::array<std::size_t, 3> counts{0, 0, 0};
  for (const Bucket b : split) ++counts[static_cast<std::size_t>(b)];
  log::info("split " + std::to_string(positives.size()) + " pairs: train " + std::to_string(counts[0]) +
            ", validation " + std::to_string(counts[1]) + ", test " + std::to_string(counts[2]) + "; " +
            std::to_string(dataset.negative_pairs().size()) + " training negatives");
  manifest.write(out / "manifest.json");
  return 0;
}

// ---------------------------------------------------------------- cluster

struct ClusterArgs {
  EmbeddingArgs embeddings;
  std::string split;
  std::size_t k = 1;
  std::uint64_t seed = 0;
  std::size_t max_iter = 100;
  double tol = 1e-6;
  std::string out;
};

ClusterModel fit_clusters(const RelationDataset& dataset, const EmbeddingTable& table, std::size_t k,
                          std::uint64_t seed, std::size_t max_iter, double tol, unsigned threads) {
  KMeansOptions options;
  options.k = k;
  options.seed = seed;
  options.max_iter = max_iter;
  options.tol = tol;
  options.threads = threads;
  return fit_kmeans(offsets(dataset.bucket(Bucket::train), table), options);
}

int run_cluster(const ClusterArgs& args, unsigned threads) {
  RunManifest manifest("cluster");
  manifest.config() = args.embeddings.echo();
  manifest.config().update(json{{"split", args.split}, {"k", args.k}, {"seed", args.seed},
                                {"max_iter", args.max_iter}, {"tol", args.tol}});
  manifest.stage("load");
  const EmbeddingTable table = args.embeddings.load();
  manifest.add_input(args.embeddings.path);
  const RelationDataset dataset = load_split_dir(args.split, table, manifest);

  manifest.stage("kmeans");
  const ClusterModel model = fit_clusters(dataset, table, args.k, args.seed, args.max_iter, args.tol, threads);

  manifest.stage("write");
  write_file_atomic(args.out, cluster_model_json(model));
  manifest.add_output(args.out);
  log::info("k-means: k = " + std::to_string(model.k()) + ", inertia " + std::to_string(model.inertia) +
            " after " + std::to_string(model.iterations) + " iterations");
  manifest.write(fs::path(args.out + ".manifest.json"));
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  EmbeddingArgs embeddings;
  std::string split;
  std::string clusters;
  std::string reg = "none";
  std::string reg_similarity = "dot";
  std::string select_on = "final";
  std::string nn_similarity = "cosine";
  TrainConfig config;
  std::string out;
};

int run_train(TrainArgs args, unsigned threads) {
  TrainConfig& cfg = args.config;
  cfg.regularizer = *parse_regularizer(args.reg);
  cfg.reg_similarity = *parse_similarity(args.reg_similarity);
  cfg.select_on = *parse_select_on(args.select_on);
  cfg.nn_similarity = *parse_similarity(args.nn_similarity);
  cfg.threads = threads;
  cfg.validate();

  RunManifest manifest("train");
  manifest.config() = args.embeddings.echo();
  manifest.config().update(json{{"split", args.split},
                                {"clusters", args.clusters},
                                {"k", cfg.k},
                                {"reg", args.reg},
                                {"lambda", cfg.lambda},
                                {"reg_similarity", args.reg_similarity},
                                {"bias", cfg.bias},
                                {"epochs", cfg.epochs},
                                {"batch_size", cfg.batch_size},
                                {"init_std", cfg.init_std},
                                {"alpha", cfg.adam.alpha},
                                {"beta1", cfg.adam.beta1},
                                {"beta2", cfg.adam.beta2},
                                {"epsilon", cfg.adam.epsilon},
                                {"seed", cfg.seed},
                                {"select_on", args.select_on}});

  manifest.stage("load");
  const EmbeddingTable table = args.embeddings.load();
  manifest.add_input(args.embeddings.path);
  const RelationDataset dataset = load_split_dir(args.split, table, manifest);

  manifest.stage("cluster");
  ClusterModel clusters;
  if (!args.clusters.empty()) {
    clusters = parse_cluster_model_json(read_file(args.clusters));
    manifest.add_input(args.clusters);
    if (clusters.dim() != table.dim()) throw InputError(args.clusters + ": dimension does not match the embeddings");
  } else {
    clusters = fit_clusters(dataset, table, cfg.k, cfg.seed, 100, 1e-6, threads);
  }

  manifest.stage("train");
  const TrainResult result = train(dataset, table, clusters, cfg);

  manifest.stage("write");
  const fs::path model_path(args.out);
  if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
  write_model(result.model, model_path);
  manifest.add_output(model_path);
  const fs::path trace_path(args.out + ".loss.csv");
  write_atomically(trace_path, [&](const fs::path& tmp) { write_loss_trace(result.trace, tmp); });
  manifest.add_output(trace_path);

  for (std::size_t c = 0; c < result.model.k(); ++c) {
    const auto& loss = result.model.meta.final_loss[c];
    log::info("cluster " + std::to_string(c) + ": " + std::to_string(result.model.meta.train_pairs[c]) +
              " pairs, final loss " + std::to_string(loss.total) + " (baseline " + std::to_string(loss.baseline) +
              ", reg " + std::to_string(loss.regularizer) + ")");
  }
  manifest.write(fs::path(args.out + ".manifest.json"));
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string model;
  EmbeddingArgs embeddings;
  std::string test;
  std::size_t l_max = 10;
  std::string similarity = "cosine";
  bool include_query = false;
  std::string out;
  std::string pairs_out;
};

int run_eval(const EvalArgs& args, unsigned threads) {
  RunManifest manifest("eval");
  json echo = args.embeddings.echo();
  echo.update(json{{"model", args.model},
                   {"test", args.test},
                   {"l_max", args.l_max},
                   {"similarity", args.similarity},
                   {"exclude_query", !args.include_query}});
  manifest.config() = echo;

  manifest.stage("load");
  const ProjectionModel model = read_model(args.model);
  manifest.add_input(args.model);
  const EmbeddingTable table = args.embeddings.load();
  manifest.add_input(args.embeddings.path);
  if (model.dim() != table.dim()) throw InputError("model dimension does not match the embeddings");
  if (!model.vocab_hash.empty() && model.vocab_hash != table.vocab_hash()) {
    log::warn("embedding vocabulary differs from the one the model was trained with");
  }
  const auto test = hypernyms_of(load_relations(args.test).pairs);
  manifest.add_input(args.test);
  if (test.empty()) throw InputError(args.test + ": no hypernym pairs");

  manifest.stage("evaluate");
  EvalOptions options;
  options.l_max = args.l_max;
  options.similarity = *parse_similarity(args.similarity);
  options.exclude_query = !args.include_query;
  options.threads = threads;
  const EvalReport report = evaluate(model, table, test, options);
  if (report.skips > 0) log::warn("skipped " + std::to_string(report.skips) + " pairs with unknown words");

  manifest.stage("write");
  const fs::path report_path(args.out);
  if (report_path.has_parent_path()) fs::create_directories(report_path.parent_path());
  write_file_atomic(report_path, report_json(report, echo.dump()));
  manifest.add_output(report_path);
  const fs::path pairs_path(args.pairs_out.empty() ? args.out + ".pairs.tsv" : args.pairs_out);
  write_atomically(pairs_path, [&](const fs::path& tmp) { write_per_pair_tsv(report, tmp); });
  manifest.add_output(pairs_path);

  std::string summary = "n = " + std::to_string(report.n_pairs);
  for (const std::size_t l : {std::size_t{1}, std::size_t{5}, std::size_t{10}}) {
    if (l <= report.hits.size()) summary += ", hit@" + std::to_string(l) + " " + std::to_string(report.hits[l - 1]);
  }
  summary += ", AUC " + std::to_string(report.auc);
  log::info(summary);
  manifest.write(fs::path(args.out + ".manifest.json"));
  return 0;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string model;
  EmbeddingArgs embeddings;
  std::vector<std::string> words;
  std::string words_file;
  std::size_t l = 10;
  std::string similarity = "cosine";
  bool include_query = false;
};

int run_predict(const PredictArgs& args, unsigned threads) {
  const ProjectionModel model = read_model(args.model);
  const EmbeddingTable table = args.embeddings.load();
  if (model.dim() != table.dim()) throw InputError("model dimension does not match the embeddings");
  std::vector<std::string> words = args.words;
  if (!args.words_file.empty()) {
    std::istringstream in(read_file(args.words_file));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) words.push_back(line);
    }
  }
  if (words.empty()) throw InputError("no words given");
  if (args.l == 0) throw InputError("--l must be at least 1");

  EvalOptions options;
  options.similarity = *parse_similarity(args.similarity);
  options.exclude_query = !args.include_query;
  options.threads = threads;
  std::size_t resolved = 0;
  std::string out = "hyponym\trank\tcandidate\tscore\n";
  for (const auto& word : words) {
    if (!table.contains(word)) {
      log::warn("'" + word + "' is not in the vocabulary");
      continue;
    }
    ++resolved;
    const auto candidates = predict_hypernyms(model, table, word, args.l, options);
    for (std::size_t r = 0; r < candidates.size(); ++r) {
      char score[32];
      std::snprintf(score, sizeof score, "%.6f", candidates[r].score);
      out += word + "\t" + std::to_string(r + 1) + "\t" + candidates[r].word + "\t" + score + "\n";
    }
  }
  std::cout << out;
  if (resolved == 0) throw InputError("none of the words are in the vocabulary");
  return 0;
}

// ---------------------------------------------------------------- synth

int run_synth(const SynthOptions& options, const std::string& out) {
  RunManifest manifest("synth");
  manifest.config() = {{"dim", options.dim},
                       {"pairs", options.pairs},
                       {"noise", options.noise},
                       {"distractors", options.distractors},
                       {"distractor_angle_deg", options.distractor_angle_deg},
                       {"planted_clusters", options.planted_clusters},
                       {"rotation_deg", options.rotation_deg ? json(*options.rotation_deg)
                                                             : json("haar")},
                       {"filler", options.filler},
                       {"seed", options.seed}};
  manifest.stage("generate");
  const SynthFixture fixture = make_synthetic(options);
  manifest.stage("write");
  const fs::path dir(out);
  fs::create_directories(dir);
  const fs::path emb = dir / "embeddings.txt";
  const fs::path rel = dir / "relations.tsv";
  write_atomically(emb, [&](const fs::path& tmp) { write_embeddings_text(fixture.table(), tmp); });
  write_atomically(rel, [&](const fs::path& tmp) { write_relations(fixture.relations, tmp); });
  manifest.add_output(emb);
  manifest.add_output(rel);
  manifest.write(dir / "manifest.json");
  log::info("wrote " + std::to_string(fixture.words.size()) + " words and " +
            std::to_string(fixture.relations.size()) + " relations to " + dir.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  log::init_from_env();

  CLI::App app{"Hypernym projection learning with asymmetric and neighbor regularizers"};
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker thread cap")->check(CLI::Range(1u, 1024u));

  SplitArgs split;
  auto* split_cmd = app.add_subcommand("split", "Lexically disjoint train/validation/test split");
  split_cmd->add_option("--relations", split.relations, "Relations TSV")->required()->check(CLI::ExistingFile);
  split_cmd->add_option("--fractions", split.fractions, "train,validation,test fractions");
  split_cmd->add_option("--seed", split.seed, "Shuffle seed");
  split_cmd->add_option("--embeddings", split.embeddings_path, "Optional text embeddings used to drop unknown words");
  split_cmd->add_option("--out", split.out, "Output directory")->required();

  ClusterArgs cluster;
  auto* cluster_cmd = app.add_subcommand("cluster", "k-means over training offsets");
  cluster.embeddings.add_to(*cluster_cmd);
  cluster_cmd->add_option("--split", cluster.split, "Split directory")->required()->check(CLI::ExistingDirectory);
  cluster_cmd->add_option("--k", cluster.k, "Number of clusters");
  cluster_cmd->add_option("--seed", cluster.seed, "k-means++ seed");
  cluster_cmd->add_option("--max-iter", cluster.max_iter, "Lloyd iteration cap");
  cluster_cmd->add_option("--tol", cluster.tol, "Centroid movement tolerance");
  cluster_cmd->add_option("--out", cluster.out, "Cluster JSON output")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train per-cluster projections");
  tr.embeddings.add_to(*train_cmd);
  train_cmd->add_option("--split", tr.split, "Split directory")->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--clusters", tr.clusters, "Cluster JSON from `cluster` (default: fit here)");
  train_cmd->add_option("--k", tr.config.k, "Number of clusters when fitting here");
  train_cmd->add_option("--reg", tr.reg, "Regularizer")
      ->check(CLI::IsMember({"none", "asym", "asym-reproj", "neighbor", "neighbor-reproj"}));
  train_cmd->add_option("--lambda", tr.config.lambda, "Regularization weight");
  train_cmd->add_option("--reg-similarity", tr.reg_similarity, "Inner product inside the regularizer")
      ->check(CLI::IsMember({"dot", "cosine"}));
  train_cmd->add_flag("--bias", tr.config.bias, "Learn a bias row (affine map)");
  train_cmd->add_option("--epochs", tr.config.epochs, "Training epochs");
  train_cmd->add_option("--batch-size", tr.config.batch_size, "Examples per optimizer step");
  train_cmd->add_option("--init-std", tr.config.init_std, "Standard deviation of the initial entries");
  train_cmd->add_option("--alpha", tr.config.adam.alpha, "Adam learning rate");
  train_cmd->add_option("--beta1", tr.config.adam.beta1, "Adam beta1");
  train_cmd->add_option("--beta2", tr.config.adam.beta2, "Adam beta2");
  train_cmd->add_option("--epsilon", tr.config.adam.epsilon, "Adam epsilon");
  train_cmd->add_option("--seed", tr.config.seed, "Seed for initialization, shuffling and negatives");
  train_cmd->add_option("--select-on", tr.select_on, "Snapshot selection")
      ->check(CLI::IsMember({"final", "best_validation_hit10"}));
  train_cmd->add_option("--out", tr.out, "Model file")->required();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "hit@l and AUC over a test file");
  eval_cmd->add_option("--model", ev.model, "Model file")->required();
  ev.embeddings.add_to(*eval_cmd);
  eval_cmd->add_option("--test", ev.test, "Test relations TSV")->required();
  eval_cmd->add_option("--l-max", ev.l_max, "Longest candidate list")->check(CLI::Range(2, 100000));
  eval_cmd->add_option("--similarity", ev.similarity, "Neighbor similarity")->check(CLI::IsMember({"cosine", "dot"}));
  eval_cmd->add_flag("--include-query", ev.include_query, "Keep the hyponym in its own candidate list");
  eval_cmd->add_option("--out", ev.out, "Report JSON")->required();
  eval_cmd->add_option("--pairs-out", ev.pairs_out, "Per-pair TSV (default: <out>.pairs.tsv)");

  PredictArgs pr;
  auto* predict_cmd = app.add_subcommand("predict", "Ranked hypernym candidates for words");
  predict_cmd->add_option("--model", pr.model, "Model file")->required();
  pr.embeddings.add_to(*predict_cmd);
  predict_cmd->add_option("words", pr.words, "Hyponyms");
  predict_cmd->add_option("--words-file", pr.words_file, "File with one hyponym per line");
  predict_cmd->add_option("--l", pr.l, "Candidates per word");
  predict_cmd->add_option("--similarity", pr.similarity, "Neighbor similarity")->check(CLI::IsMember({"cosine", "dot"}));
  predict_cmd->add_flag("--include-query", pr.include_query, "Allow the word itself as a candidate");

  SynthOptions sy;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Planted synthetic embeddings and relations");
  synth_cmd->add_option("--dim", sy.dim, "Embedding dimension");
  synth_cmd->add_option("--pairs", sy.pairs, "Hyponym-hypernym pairs");
  synth_cmd->add_option("--noise", sy.noise, "Gaussian noise on hypernym coordinates");
  synth_cmd->add_option("--distractors", sy.distractors, "Synonym distractors per hyponym");
  synth_cmd->add_option("--distractor-angle", sy.distractor_angle_deg, "Maximum distractor angle in degrees");
  synth_cmd->add_option("--clusters", sy.planted_clusters, "Planted mixing matrices");
  synth_cmd->add_option("--rotation", sy.rotation_deg, "Planted rotation angle in degrees (default: Haar-random orthogonal)");
  synth_cmd->add_option("--filler", sy.filler, "Extra random words");
  synth_cmd->add_option("--seed", sy.seed, "Generator seed");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*split_cmd) return run_split(split);
    if (*cluster_cmd) return run_cluster(cluster, threads);
    if (*train_cmd) return run_train(tr, threads);
    if (*eval_cmd) return run_eval(ev, threads);
    if (*predict_cmd) return run_predict(pr, threads);
    if (*synth_cmd) return run_synth(sy, synth_out);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace hyperproj::cli

int main(int argc, char** argv) { return hyperproj::cli::main(argc, argv); }
