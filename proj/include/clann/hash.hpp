#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>

namespace clann {

// 64-bit FNV-1a; used for content fingerprints, not for security.
class Fnv1a {
 public:
  void add_byte(std::uint8_t b) {
    state_ ^= b;
    state_ *= 0x100000001b3ULL;
  }
  void add(std::string_view s) {
    for (char c : s) add_byte(static_cast<std::uint8_t>(c));
  }
  void add(std::uint64_t x) {
    for (int i = 0; i < 8; ++i) add_byte(static_cast<std::uint8_t>(x >> (8 * i)));
  }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

// Fingerprint of a file's bytes; throws ValidationError when unreadable.
std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace clann
