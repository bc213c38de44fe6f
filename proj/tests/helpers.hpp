#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

namespace testutil {

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

// Fresh scratch directory per call, under the system temp root.
inline std::string scratch_dir(const std::string& tag) {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("pabi-test-" + std::to_string(::getpid()) + "-" + tag + "-" + std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline double rel_err(double value, double reference) {
  return std::abs(value - reference) / std::abs(reference);
}

inline std::string fixture(const std::string& name) {
  return std::string(PABI_SOURCE_DIR) + "/fixtures/" + name;
}

} // namespace testutil
