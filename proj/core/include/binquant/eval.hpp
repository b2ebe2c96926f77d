#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "binquant/embedding.hpp"

namespace binquant::eval {

/// x . y / (|x| |y|). Throws DegenerateError for a zero vector.
double cosine_similarity(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Dot product of two packed +-1 rows: 2 * popcount(~(a ^ b)) - c over the
/// first `code_bits` bits. Range [-c, c], same parity as c.
std::int64_t binary_dot(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                        std::size_t code_bits);

/// Spearman rank correlation: Pearson correlation of average-ranked values,
/// ties receiving the mean of their rank range. Throws DegenerateError when
/// either list is constant.
double spearman(std::span<const double> a, std::span<const double> b);

struct SimilarityResult {
    double rho = 0.0;
    std::size_t n_pairs = 0;
    std::size_t n_oov = 0;  ///< pairs containing at least one OOV token
};

/// Spearman correlation between cosine similarities and human scores.
/// Out-of-vocabulary tokens are replaced by the mean vector over the whole
/// embedding; binary codes are cast to +-1 reals first.
SimilarityResult eval_word_similarity(const EmbeddingMatrix& emb, const SimilarityDataset& ds);
SimilarityResult eval_word_similarity(const BinaryEmbedding& emb, const SimilarityDataset& ds);

struct PurityResult {
    double purity = 0.0;
    int k = 0;
    std::vector<int> assignments;  ///< cluster id per dataset word, in order
};

/// Lloyd k-means with seeded k-means++ initialization, best of `restarts`
/// runs by within-cluster sum of squares (ties broken by restart index).
/// purity = (1/N) * sum over clusters of the majority gold-category count.
/// k = 0 selects the number of gold categories.
PurityResult kmeans_purity(const EmbeddingMatrix& emb, const CategorizationDataset& ds,
                           int k = 0, std::uint64_t seed = 0, int restarts = 10);
PurityResult kmeans_purity(const BinaryEmbedding& emb, const CategorizationDataset& ds,
                           int k = 0, std::uint64_t seed = 0, int restarts = 10);

struct Neighbor {
    std::string token;
    double score = 0.0;
};

/// Top-k tokens ranked by similarity to the query token (dot product over
/// packed codes for binary embeddings, cosine for real ones), the query
/// itself excluded. `furthest` ranks from the bottom instead. Ties break by
/// vocabulary index ascending. The query must be in the vocabulary.
std::vector<Neighbor> nearest_neighbors(const EmbeddingMatrix& emb, const std::string& token,
                                        std::size_t k, bool furthest = false);
std::vector<Neighbor> nearest_neighbors(const BinaryEmbedding& emb, const std::string& token,
                                        std::size_t k, bool furthest = false);

} // namespace binquant::eval
