#include "qr/hash.hpp"

#include <array>
#include <fstream>

#include <fmt/format.h>

#include "qr/error.hpp"

namespace qr {

std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  Fnv1a h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  return h.value();
}

std::string hex64(std::uint64_t value) { return fmt::format("{:016x}", value); }

}  // namespace qr
