#pragma once

#include <filesystem>

#include "qr/kernel/init.hpp"
#include "qr/kernel/matrix.hpp"
#include "qr/text/vocabulary.hpp"

namespace qr::ae {

struct PretrainedEmbeddings {
  kernel::Matrix table;          // vocab x dim
  std::size_t covered = 0;       // non-reserved vocabulary rows copied from the file
  std::size_t file_words = 0;    // vectors read
};

/// Reads "word v1 ... vd" lines (an optional word2vec "count dim" header line
/// is skipped). Vocabulary words found in the file get the file vector; all
/// other rows, UNK included, come from uniform_init in [-0.1, 0.1). The PAD
/// row is zero. Throws when a vector's width differs from dim.
PretrainedEmbeddings load_pretrained_embeddings(const std::filesystem::path& path, const text::Vocabulary& vocab,
                                                std::size_t dim, kernel::Rng& rng);

}  // namespace qr::ae
