#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>

#include "hyperproj/log.hpp"

int main(int argc, char** argv) {
  if (std::getenv("HYPERPROJ_LOG")) {
    hyperproj::log::init_from_env();
  } else {
    hyperproj::log::set_level("error");
  }
  return doctest::Context(argc, argv).run();
}
