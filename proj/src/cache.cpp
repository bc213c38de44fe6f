#include "pabi/cache.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

#include "json.hpp"

namespace pabi {

DiskCache::DiskCache(std::string dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::string DiskCache::hash_hex(const std::string& key) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::optional<std::string> DiskCache::get(const std::string& key) {
  std::ifstream in(dir_ + "/" + hash_hex(key) + ".json", std::ios::binary);
  if (in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
      nlohmann::json j = nlohmann::json::parse(buf.str());
      if (j.at("key").get<std::string>() == key) {
        ++hits_;
        return j.at("payload").get<std::string>();
      }
    } catch (const std::exception&) {
      // unreadable entry counts as a miss and is overwritten on the next put
    }
  }
  ++misses_;
  return std::nullopt;
}

void DiskCache::put(const std::string& key, const std::string& payload) {
  nlohmann::json j{{"key", key}, {"payload", payload}};
  std::string final_path = dir_ + "/" + hash_hex(key) + ".json";
  std::string tmp_path = final_path + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    out << j.dump();
    if (!out) throw std::runtime_error("cache write failed: " + tmp_path);
  }
  std::filesystem::rename(tmp_path, final_path);
}

} // namespace pabi
