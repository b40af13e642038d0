#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace qr {

// 64-bit FNV-1a.
class Fnv1a {
 public:
  void update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
  }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t hash_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t value);

}  // namespace qr
