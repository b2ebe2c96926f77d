#include "binquant/embedding.hpp"

#include <unordered_set>

#include "binquant/errors.hpp"

namespace binquant {

namespace {

void validate_vocab(const std::vector<std::string>& vocab) {
    if (vocab.empty()) {
        throw DimensionError("embedding must contain at least one vector");
    }
    std::unordered_set<std::string_view> seen;
    seen.reserve(vocab.size());
    for (const auto& token : vocab) {
        if (token.empty()) {
            throw ParameterError("empty token in vocabulary");
        }
        if (!seen.insert(token).second) {
            throw ParameterError("duplicate token in vocabulary: '" + token + "'");
        }
    }
}

} // namespace

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> vocab, Eigen::MatrixXd data)
    : vocab_(std::move(vocab)), data_(std::move(data)) {
    validate_vocab(vocab_);
    if (static_cast<std::size_t>(data_.rows()) != vocab_.size()) {
        throw DimensionError("vocabulary size does not match row count");
    }
    if (data_.cols() < 1) {
        throw DimensionError("embedding dimension must be at least 1");
    }
    if (!data_.allFinite()) {
        throw NumericError("embedding contains non-finite values");
    }
}

BinaryEmbedding::BinaryEmbedding(std::vector<std::string> vocab, std::size_t code_bits)
    : vocab_(std::move(vocab)), code_bits_(code_bits), row_bytes_((code_bits + 7) / 8) {
    validate_vocab(vocab_);
    if (code_bits_ == 0) {
        throw DimensionError("code length must be at least 1 bit");
    }
    bits_.assign(vocab_.size() * row_bytes_, 0);
}

BinaryEmbedding BinaryEmbedding::from_signs(std::vector<std::string> vocab,
                                            const Eigen::MatrixXd& signs) {
    if (static_cast<std::size_t>(signs.rows()) != vocab.size()) {
        throw DimensionError("vocabulary size does not match row count");
    }
    BinaryEmbedding out(std::move(vocab), static_cast<std::size_t>(signs.cols()));
    for (Eigen::Index i = 0; i < signs.rows(); ++i) {
        for (Eigen::Index j = 0; j < signs.cols(); ++j) {
            const double v = signs(i, j);
            if (v != 1.0 && v != -1.0) {
                throw ParameterError("binary embedding entries must be exactly -1 or +1");
            }
            if (v == 1.0) {
                out.bits_[i * out.row_bytes_ + j / 8] |=
                    static_cast<std::uint8_t>(1u << (j % 8));
            }
        }
    }
    return out;
}

int BinaryEmbedding::bit(std::size_t row, std::size_t col) const {
    const std::uint8_t byte = bits_[row * row_bytes_ + col / 8];
    return (byte >> (col % 8)) & 1u ? 1 : -1;
}

void BinaryEmbedding::set_bit(std::size_t row, std::size_t col, int value) {
    if (value != 1 && value != -1) {
        throw ParameterError("binary embedding entries must be exactly -1 or +1");
    }
    std::uint8_t& byte = bits_[row * row_bytes_ + col / 8];
    const std::uint8_t mask = static_cast<std::uint8_t>(1u << (col % 8));
    if (value == 1) {
        byte |= mask;
    } else {
        byte &= static_cast<std::uint8_t>(~mask);
    }
}

std::span<const std::uint8_t> BinaryEmbedding::row(std::size_t i) const {
    return {bits_.data() + i * row_bytes_, row_bytes_};
}

Eigen::VectorXd BinaryEmbedding::row_signs(std::size_t i) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(code_bits_));
    for (std::size_t j = 0; j < code_bits_; ++j) {
        out(static_cast<Eigen::Index>(j)) = bit(i, j);
    }
    return out;
}

Eigen::MatrixXd BinaryEmbedding::to_signs() const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(size()),
                        static_cast<Eigen::Index>(code_bits_));
    for (std::size_t i = 0; i < size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = row_signs(i).transpose();
    }
    return out;
}

} // namespace binquant
