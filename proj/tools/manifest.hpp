#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace hyperproj::cli {

// Record of one subcommand run: flags, hashed inputs and outputs, and
// per-stage wall-clock timings.
class RunManifest {
 public:
  explicit RunManifest(std::string command) : command_(std::move(command)) {}

  nlohmann::ordered_json& config() { return config_; }

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);

  // Starts timing a stage; the previous stage, if any, ends here.
  void stage(const std::string& name);

  // Closes the open stage and writes the manifest atomically.
  void write(const std::filesystem::path& path);

 private:
  using Clock = std::chrono::steady_clock;

  void close_stage();

  std::string command_;
  nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
  std::vector<std::pair<std::string, double>> timings_;
  std::string open_stage_;
  Clock::time_point stage_start_;
};

}  // namespace hyperproj::cli
