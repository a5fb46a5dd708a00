#include "hyperproj/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace hyperproj::log {
namespace {

std::shared_ptr<spdlog::logger> logger() {
  static auto instance = [] {
    auto l = spdlog::stderr_color_mt("hyperproj");
    l->set_pattern("[%l] %v");
    l->set_level(spdlog::level::info);
    return l;
  }();
  return instance;
}

}  // namespace

void init_from_env() {
  if (const char* level = std::getenv("HYPERPROJ_LOG")) set_level(level);
}

void set_level(std::string_view level) {
  const auto parsed = spdlog::level::from_str(std::string(level));
  // from_str maps unknown names to off; only accept it when asked for.
  if (parsed == spdlog::level::off && level != "off") return;
  logger()->set_level(parsed);
}

void debug(std::string_view message) { logger()->debug(message); }
void info(std::string_view message) { logger()->info(message); }
void warn(std::string_view message) { logger()->warn(message); }

}  // namespace hyperproj::log
