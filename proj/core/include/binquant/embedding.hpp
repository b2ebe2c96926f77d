#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace binquant {

/// Vocabulary plus a dense n x d matrix, one real-valued vector per row.
/// Tokens are unique, non-empty UTF-8 strings; all entries are finite.
class EmbeddingMatrix {
public:
    EmbeddingMatrix(std::vector<std::string> vocab, Eigen::MatrixXd data);

    std::size_t size() const { return vocab_.size(); }
    Eigen::Index dim() const { return data_.cols(); }
    const std::vector<std::string>& vocab() const { return vocab_; }
    const Eigen::MatrixXd& data() const { return data_; }

private:
    std::vector<std::string> vocab_;
    Eigen::MatrixXd data_;
};

/// Vocabulary plus an n x c matrix of logical {-1,+1} values stored packed,
/// 8 codes per byte. Bit j of row i lives in byte j/8 at bit position j%8
/// (LSB-first); bit value 1 encodes +1, bit value 0 encodes -1. Padding bits
/// in the final byte of each row are zero.
class BinaryEmbedding {
public:
    /// All-(-1) embedding of the given shape.
    BinaryEmbedding(std::vector<std::string> vocab, std::size_t code_bits);

    /// Packs a matrix whose entries are exactly -1.0 or +1.0.
    static BinaryEmbedding from_signs(std::vector<std::string> vocab,
                                      const Eigen::MatrixXd& signs);

    std::size_t size() const { return vocab_.size(); }
    std::size_t code_bits() const { return code_bits_; }
    std::size_t row_bytes() const { return row_bytes_; }
    const std::vector<std::string>& vocab() const { return vocab_; }

    /// Logical value at (row, col): -1 or +1.
    int bit(std::size_t row, std::size_t col) const;
    void set_bit(std::size_t row, std::size_t col, int value);

    std::span<const std::uint8_t> row(std::size_t i) const;

    /// Row i unpacked to a vector of +-1.0 values.
    Eigen::VectorXd row_signs(std::size_t i) const;

    /// Whole matrix unpacked to +-1.0 values. from_signs(vocab, to_signs())
    /// reproduces the embedding exactly.
    Eigen::MatrixXd to_signs() const;

    bool operator==(const BinaryEmbedding&) const = default;

private:
    std::vector<std::string> vocab_;
    std::size_t code_bits_ = 0;
    std::size_t row_bytes_ = 0;
    std::vector<std::uint8_t> bits_;
};

struct SimilarityPair {
    std::string word1;
    std::string word2;
    double score = 0.0;
};

/// Word pairs with human-rated similarity scores.
struct SimilarityDataset {
    std::vector<SimilarityPair> pairs;
};

struct CategorizationItem {
    std::string word;
    std::string label;
};

/// Words with gold category labels.
struct CategorizationDataset {
    std::vector<CategorizationItem> items;
};

} // namespace binquant
