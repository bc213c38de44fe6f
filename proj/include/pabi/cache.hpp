#pragma once

#include <optional>
#include <string>

namespace pabi {

// Content-addressed single-directory store for JSON payloads.  Writes are
// atomic (temp file + rename), so concurrent producers of the same key can
// only replace equal content.  Keys are arbitrary strings; the full key is
// stored alongside the payload and checked on read, so a hash collision
// degrades to a miss.
class DiskCache {
public:
  explicit DiskCache(std::string dir); // creates the directory if needed

  std::optional<std::string> get(const std::string& key);
  void put(const std::string& key, const std::string& payload);

  long hits() const { return hits_; }
  long misses() const { return misses_; }

  static std::string hash_hex(const std::string& key); // 64-bit FNV-1a

private:
  std::string dir_;
  long hits_ = 0, misses_ = 0;
};

} // namespace pabi
