#include "qr/autoencoder/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "qr/error.hpp"
#include "qr/hash.hpp"

namespace qr::ae {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'Q', 'R', 'A', 'E', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw Error(fmt::format("{}: truncated checkpoint", path.string()));
  }
  return value;
}

CheckpointHeader read_header(std::istream& in, const std::filesystem::path& path) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error(fmt::format("{}: not a checkpoint file", path.string()));
  }
  CheckpointHeader h;
  h.version = get<std::uint32_t>(in, path);
  if (h.version != kCheckpointVersion) {
    throw Error(fmt::format("{}: checkpoint version {} unsupported (expected {})", path.string(), h.version,
                            kCheckpointVersion));
  }
  h.vocab_hash = get<std::uint64_t>(in, path);
  h.config.vocab_size = get<std::uint64_t>(in, path);
  h.config.d_model = get<std::uint64_t>(in, path);
  h.config.d_k = get<std::uint64_t>(in, path);
  h.config.d_ff = get<std::uint64_t>(in, path);
  h.config.layers = get<std::uint64_t>(in, path);
  h.config.positional_encoding = get<std::uint8_t>(in, path) != 0;
  validate(h.config);
  return h;
}

}  // namespace

void save_checkpoint(const AutoencoderModel& model, std::uint64_t vocab_hash, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, vocab_hash);
  const ModelConfig& c = model.config;
  put<std::uint64_t>(out, c.vocab_size);
  put<std::uint64_t>(out, c.d_model);
  put<std::uint64_t>(out, c.d_k);
  put<std::uint64_t>(out, c.d_ff);
  put<std::uint64_t>(out, c.layers);
  put<std::uint8_t>(out, c.positional_encoding ? 1 : 0);
  const auto tensors = model.params.tensors();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const Matrix* m : tensors) {
    put<std::uint64_t>(out, m->rows());
    put<std::uint64_t>(out, m->cols());
    const auto v = m->values();
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
  }
  if (!out) throw Error(fmt::format("write failed: {}", path.string()));
}

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  return read_header(in, path);
}

AutoencoderModel load_checkpoint(const std::filesystem::path& path, std::optional<std::uint64_t> expected_vocab_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  const CheckpointHeader h = read_header(in, path);
  if (expected_vocab_hash && *expected_vocab_hash != h.vocab_hash) {
    throw Error(fmt::format("{}: vocabulary hash {} does not match {}", path.string(), hex64(h.vocab_hash),
                            hex64(*expected_vocab_hash)));
  }
  AutoencoderModel model{h.config, Parameters::zeros(h.config)};
  const auto tensors = model.params.tensors();
  const auto count = get<std::uint32_t>(in, path);
  if (count != tensors.size()) {
    throw Error(fmt::format("{}: {} tensors, expected {}", path.string(), count, tensors.size()));
  }
  const auto names = model.params.names();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    const auto rows = get<std::uint64_t>(in, path);
    const auto cols = get<std::uint64_t>(in, path);
    if (rows != tensors[t]->rows() || cols != tensors[t]->cols()) {
      throw Error(fmt::format("{}: tensor {} is {}x{}, expected {}x{}", path.string(), names[t], rows, cols,
                              tensors[t]->rows(), tensors[t]->cols()));
    }
    auto v = tensors[t]->values();
    if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()))) {
      throw Error(fmt::format("{}: truncated checkpoint", path.string()));
    }
    if (!tensors[t]->all_finite()) throw Error(fmt::format("{}: non-finite values in {}", path.string(), names[t]));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error(fmt::format("{}: trailing data", path.string()));
  return model;
}

}  // namespace qr::ae
