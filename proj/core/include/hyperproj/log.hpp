#pragma once

#include <string_view>

namespace hyperproj::log {

// Reads the verbosity from HYPERPROJ_LOG (trace, debug, info, warn, error,
// off). Unset or unrecognized values leave the default (info).
void init_from_env();

void set_level(std::string_view level);

void debug(std::string_view message);
void info(std::string_view message);
void warn(std::string_view message);

}  // namespace hyperproj::log
