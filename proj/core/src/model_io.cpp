#include "hyperproj/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include <nlohmann/json.hpp>

#include "hyperproj/error.hpp"

namespace hyperproj {
namespace {

constexpr std::string_view kMagic = "HPRJ1";

using json = nlohmann::ordered_json;

void append_f64(std::string& out, double value) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
  for (int shift = 0; shift < 64; shift += 8) out.push_back(static_cast<char>((bits >> shift) & 0xff));
}

double read_f64(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<double>(bits);
}

json loss_json(const LossTerms& t) { return json::array({t.baseline, t.regularizer, t.total}); }

LossTerms loss_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw InputError("model header: malformed final_loss entry");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json header_json(const ProjectionModel& model) {
  const TrainingMeta& meta = model.meta;
  json h;
  h["dim"] = model.dim();
  h["k"] = model.k();
  h["regularizer"] = std::string(regularizer_name(model.objective.kind));
  h["lambda"] = model.objective.lambda;
  h["reg_similarity"] = model.objective.similarity == Similarity::dot ? "dot" : "cosine";
  h["bias"] = model.affine();
  h["seed"] = meta.seed;
  h["epochs"] = meta.epochs;
  h["batch_size"] = meta.batch_size;
  h["init_std"] = meta.init_std;
  h["adam"] = {{"alpha", meta.adam_alpha},
               {"beta1", meta.adam_beta1},
               {"beta2", meta.adam_beta2},
               {"epsilon", meta.adam_epsilon}};
  h["select_on"] = meta.select_on;
  h["vocab_hash"] = model.vocab_hash;
  h["inertia"] = model.clusters.inertia;
  h["kmeans_iterations"] = model.clusters.iterations;
  h["train_pairs"] = meta.train_pairs;
  h["steps"] = meta.steps;
  h["selected_epoch"] = meta.selected_epoch;
  json losses = json::array();
  for (const auto& l : meta.final_loss) losses.push_back(loss_json(l));
  h["final_loss"] = losses;
  return h;
}

template <typename T>
T field(const json& h, const char* name) {
  if (!h.contains(name)) throw InputError(std::string("model header: missing field '") + name + "'");
  try {
    return h.at(name).get<T>();
  } catch (const json::exception& e) {
    throw InputError(std::string("model header: bad field '") + name + "': " + e.what());
  }
}

template <typename T>
T optional_field(const json& h, const char* name, T fallback) {
  return h.contains(name) ? field<T>(h, name) : fallback;
}

}  // namespace

std::string serialize_model(const ProjectionModel& model) {
  model.validate();
  std::string out(kMagic);
  out += header_json(model).dump();
  out.push_back('\0');
  for (Eigen::Index c = 0; c < model.clusters.centroids.rows(); ++c) {
    for (Eigen::Index j = 0; j < model.clusters.centroids.cols(); ++j) append_f64(out, model.clusters.centroids(c, j));
  }
  for (const auto& p : model.projections) {
    for (Eigen::Index i = 0; i < p.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.weights.cols(); ++j) append_f64(out, p.weights(i, j));
    }
  }
  if (model.affine()) {
    for (const auto& p : model.projections) {
      for (Eigen::Index j = 0; j < p.bias.size(); ++j) append_f64(out, p.bias[j]);
    }
  }
  return out;
}

ProjectionModel deserialize_model(const std::string& bytes) {
  if (bytes.size() < kMagic.size() || std::string_view(bytes).substr(0, kMagic.size()) != kMagic) {
    throw InputError("not a model file (bad magic)");
  }
  const std::size_t nul = bytes.find('\0', kMagic.size());
  if (nul == std::string::npos) throw InputError("model file: unterminated header");
  json h;
  try {
    h = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(kMagic.size()),
                    bytes.begin() + static_cast<std::ptrdiff_t>(nul));
  } catch (const json::exception& e) {
    throw InputError(std::string("model file: malformed header: ") + e.what());
  }

  const auto d = field<std::size_t>(h, "dim");
  const auto k = field<std::size_t>(h, "k");
  const bool bias = optional_field<bool>(h, "bias", false);
  if (d == 0 || k == 0) throw InputError("model file: dim and k must be positive");
  const std::size_t values = k * d + k * d * d + (bias ? k * d : 0);
  const std::size_t payload = bytes.size() - nul - 1;
  if (payload != values * 8) {
    throw InputError("model file: expected " + std::to_string(values * 8) + " payload bytes for dim " +
                     std::to_string(d) + " and k " + std::to_string(k) + ", found " + std::to_string(payload));
  }

  ProjectionModel model;
  const auto kind = parse_regularizer(field<std::string>(h, "regularizer"));
  if (!kind) throw InputError("model file: unknown regularizer");
  model.objective.kind = *kind;
  model.objective.lambda = field<double>(h, "lambda");
  const auto sim = parse_similarity(optional_field<std::string>(h, "reg_similarity", "dot"));
  if (!sim) throw InputError("model file: unknown regularizer similarity");
  model.objective.similarity = *sim;
  model.vocab_hash = optional_field<std::string>(h, "vocab_hash", "");

  TrainingMeta& meta = model.meta;
  meta.seed = field<std::uint64_t>(h, "seed");
  meta.epochs = field<std::size_t>(h, "epochs");
  meta.batch_size = field<std::size_t>(h, "batch_size");
  meta.init_std = optional_field<double>(h, "init_std", 0.0);
  if (h.contains("adam")) {
    const json& a = h["adam"];
    meta.adam_alpha = field<double>(a, "alpha");
    meta.adam_beta1 = field<double>(a, "beta1");
    meta.adam_beta2 = field<double>(a, "beta2");
    meta.adam_epsilon = field<double>(a, "epsilon");
  }
  meta.select_on = optional_field<std::string>(h, "select_on", "final");
  meta.train_pairs = optional_field<std::vector<std::size_t>>(h, "train_pairs", {});
  meta.steps = optional_field<std::vector<std::size_t>>(h, "steps", {});
  meta.selected_epoch = optional_field<std::vector<std::size_t>>(h, "selected_epoch", {});
  if (h.contains("final_loss")) {
    for (const auto& l : h["final_loss"]) meta.final_loss.push_back(loss_from_json(l));
  }

  const char* p = bytes.data() + nul + 1;
  const auto dd = static_cast<Eigen::Index>(d);
  model.clusters.centroids.resize(static_cast<Eigen::Index>(k), dd);
  for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(k); ++c) {
    for (Eigen::Index j = 0; j < dd; ++j, p += 8) model.clusters.centroids(c, j) = read_f64(p);
  }
  model.clusters.inertia = optional_field<double>(h, "inertia", 0.0);
  model.clusters.iterations = optional_field<std::size_t>(h, "kmeans_iterations", 0);
  model.projections.resize(k);
  for (auto& proj : model.projections) {
    proj.weights.resize(dd, dd);
    for (Eigen::Index i = 0; i < dd; ++i) {
      for (Eigen::Index j = 0; j < dd; ++j, p += 8) proj.weights(i, j) = read_f64(p);
    }
  }
  if (bias) {
    for (auto& proj : model.projections) {
      proj.bias.resize(dd);
      for (Eigen::Index j = 0; j < dd; ++j, p += 8) proj.bias[j] = read_f64(p);
    }
  }
  model.validate();
  return model;
}

void write_model(const ProjectionModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

ProjectionModel read_model(const std::filesystem::path& path) {
  try {
    return deserialize_model(read_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string cluster_model_json(const ClusterModel& model) {
  json j;
  j["k"] = model.k();
  j["dim"] = model.dim();
  json rows = json::array();
  for (Eigen::Index c = 0; c < model.centroids.rows(); ++c) {
    json row = json::array();
    for (Eigen::Index d = 0; d < model.centroids.cols(); ++d) row.push_back(model.centroids(c, d));
    rows.push_back(row);
  }
  j["centroids"] = rows;
  j["inertia"] = model.inertia;
  j["iterations"] = model.iterations;
  j["inertia_trace"] = model.inertia_trace;
  return j.dump(2) + "\n";
}

ClusterModel parse_cluster_model_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("cluster file: malformed JSON: ") + e.what());
  }
  const auto k = field<std::size_t>(j, "k");
  const auto d = field<std::size_t>(j, "dim");
  const auto rows = field<std::vector<std::vector<double>>>(j, "centroids");
  if (k == 0 || d == 0 || rows.size() != k) throw InputError("cluster file: centroid count does not match k");
  ClusterModel model;
  model.centroids.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  for (std::size_t c = 0; c < k; ++c) {
    if (rows[c].size() != d) throw InputError("cluster file: centroid dimension does not match dim");
    for (std::size_t i = 0; i < d; ++i) {
      model.centroids(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) = rows[c][i];
    }
  }
  if (!model.centroids.allFinite()) throw InputError("cluster file: non-finite centroid");
  model.inertia = optional_field<double>(j, "inertia", 0.0);
  model.iterations = optional_field<std::size_t>(j, "iterations", 0);
  model.inertia_trace = optional_field<std::vector<double>>(j, "inertia_trace", {});
  return model;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw Error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

}  // namespace hyperproj
