#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "binquant/embedding.hpp"
#include "binquant/linalg.hpp"

namespace binquant::quantizer {

enum class Method { IIQ, ITQ };

struct CompressionConfig {
    Method method = Method::IIQ;
    int remove_top = 0;     ///< top singular values zeroed before quantization (IIQ only)
    int iterations = 50;    ///< alternating sign/rotation updates
    int out_dim = 0;        ///< output code length in bits; 0 means the input dimension
    std::uint64_t seed = 0; ///< seeds the initial rotation
};

struct QuantizationTrace {
    /// One quantization-loss value per iteration, measured after the sign
    /// step and before the rotation update. Non-increasing.
    std::vector<double> losses;
    linalg::RotationMatrix final_rotation;
    Eigen::VectorXd mean;        ///< column means removed from the input
    Eigen::MatrixXd projection;  ///< d x out_dim map applied before the rotation
};

/// Elementwise sign with sgn(0) = +1; every output entry is exactly -1 or +1.
Eigen::MatrixXd sign_matrix(const Eigen::MatrixXd& m);

/// Zeroes the top `count` singular values of a column-zero-mean matrix and
/// reconstructs. Output stays column-zero-mean; its squared Frobenius norm
/// drops by exactly the sum of the removed squared singular values.
Eigen::MatrixXd remove_top_singular(const Eigen::MatrixXd& centered, Eigen::Index count);

struct ItqProjection {
    Eigen::MatrixXd basis;      ///< W, d x c with orthonormal columns
    Eigen::MatrixXd projected;  ///< V = centered * W
};

/// Bit-variance-maximizing projection: W spans the top `out_dim` right
/// singular vectors of the centered input.
ItqProjection itq_projection(const Eigen::MatrixXd& centered, Eigen::Index out_dim);

struct MinimizeResult {
    Eigen::MatrixXd codes;  ///< n x c, entries exactly -1 or +1
    QuantizationTrace trace;
};

/// Alternating minimization of ||B - X R||_F^2: per iteration, B <- sgn(X R)
/// then R <- procrustes_rotation(B, X). The returned codes are sgn(X R) with
/// the final rotation. Deterministic for a given seed.
MinimizeResult minimize_quantization(const Eigen::MatrixXd& data, int iterations,
                                     std::uint64_t seed);

/// ||codes - data * rotation||_F^2.
double quantization_loss(const Eigen::MatrixXd& codes, const Eigen::MatrixXd& data,
                         const linalg::RotationMatrix& rotation);

struct CompressResult {
    BinaryEmbedding embedding;
    QuantizationTrace trace;
};

/// Isotropy-preserving pipeline: center, zero the top remove_top singular
/// values, PCA-project when out_dim < d, then minimize quantization loss.
CompressResult iiq_compress(const EmbeddingMatrix& input, const CompressionConfig& config);

/// Classical bit-variance pipeline: center, project onto the top out_dim
/// right singular vectors, then minimize quantization loss. remove_top is
/// ignored.
CompressResult itq_compress(const EmbeddingMatrix& input, const CompressionConfig& config);

/// Dispatches on config.method.
CompressResult compress(const EmbeddingMatrix& input, const CompressionConfig& config);

/// CSV export of a loss trace: header `iteration,loss`, one row per
/// iteration, iterations numbered from 1.
void save_loss_curve(const std::vector<double>& losses, const std::filesystem::path& path);

} // namespace binquant::quantizer
