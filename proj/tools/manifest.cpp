#include "manifest.hpp"

#include "hyperproj/hashing.hpp"
#include "hyperproj/model_io.hpp"

namespace hyperproj::cli {

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs_.emplace_back(path.string(), sha256_file(path));
}

void RunManifest::add_output(const std::filesystem::path& path) {
  outputs_.emplace_back(path.string(), sha256_file(path));
}

void RunManifest::stage(const std::string& name) {
  close_stage();
  open_stage_ = name;
  stage_start_ = Clock::now();
}

void RunManifest::close_stage() {
  if (open_stage_.empty()) return;
  const std::chrono::duration<double, std::milli> elapsed = Clock::now() - stage_start_;
  timings_.emplace_back(open_stage_, elapsed.count());
  open_stage_.clear();
}

void RunManifest::write(const std::filesystem::path& path) {
  close_stage();
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["config"] = config_;
  auto files = [](const auto& list) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [p, hash] : list) arr.push_back({{"path", p}, {"sha256", hash}});
    return arr;
  };
  j["inputs"] = files(inputs_);
  j["outputs"] = files(outputs_);
  nlohmann::ordered_json timings = nlohmann::ordered_json::object();
  for (const auto& [stage, ms] : timings_) timings[stage] = ms;
  j["timings_ms"] = timings;
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace hyperproj::cli
