#pragma once

#include <filesystem>

#include "binquant/embedding.hpp"

namespace binquant::io {

/// Loads a GloVe-style text embedding: one `token v1 v2 ... vd` line per
/// word, single spaces, consistent dimension across lines. Values are parsed
/// at 64-bit precision. Rejects duplicate tokens and non-finite values.
EmbeddingMatrix load_text_embedding(const std::filesystem::path& path);

/// Writes the packed binary format (all integers little-endian):
///   magic "BEMB" | version u32 | n u64 | c u32
///   per token: byte length u32, UTF-8 bytes
///   n rows of ceil(c/8) code bytes
void save_packed(const BinaryEmbedding& embedding, const std::filesystem::path& path);

BinaryEmbedding load_packed(const std::filesystem::path& path);

/// True when the file starts with the packed-format magic bytes.
bool is_packed_file(const std::filesystem::path& path);

/// Tab- or comma-separated lines: `word1 <sep> word2 <sep> score`.
SimilarityDataset load_similarity_dataset(const std::filesystem::path& path);

/// Tab- or comma-separated lines: `word <sep> label`. Requires at least two
/// distinct labels.
CategorizationDataset load_categorization_dataset(const std::filesystem::path& path);

} // namespace binquant::io
