#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "qr/autoencoder/model.hpp"

namespace qr::ae {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointHeader {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t vocab_hash = 0;
  ModelConfig config;
};

// Layout, all little-endian: magic "QRAECKPT", u32 version, u64 vocab hash,
// u64 vocab/d_model/d_k/d_ff/layers, u8 positional flag, u32 tensor count,
// then per tensor u64 rows, u64 cols and rows*cols IEEE-754 doubles.
void save_checkpoint(const AutoencoderModel& model, std::uint64_t vocab_hash, const std::filesystem::path& path);

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path);

/// Throws on a bad magic, unsupported version, truncated data, or (when
/// expected_vocab_hash is given) a vocabulary hash mismatch.
AutoencoderModel load_checkpoint(const std::filesystem::path& path,
                                 std::optional<std::uint64_t> expected_vocab_hash = std::nullopt);

}  // namespace qr::ae
