#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace binquant::linalg {

struct Centered {
    Eigen::MatrixXd data;  ///< input minus its column means; columns sum to ~0
    Eigen::VectorXd mean;  ///< the removed column means
};

/// Subtracts column means. mean_center of a centered matrix is the identity.
Centered mean_center(const Eigen::MatrixXd& x);

/// Thin SVD: input = left * diag(singular_values) * right, with
/// k = min(rows, cols), orthonormal columns in `left` and orthonormal rows
/// in `right`, singular values descending. Deterministic sign convention:
/// the largest-magnitude entry of each right singular vector is non-negative.
struct SvdFactors {
    Eigen::MatrixXd left;             // n x k
    Eigen::VectorXd singular_values;  // k, descending, >= 0
    Eigen::MatrixXd right;            // k x d
};

/// Computed through the d x d Gram matrix (embeddings have n >> d), with the
/// left factor recovered as X q / sigma and rank-deficient directions filled
/// by orthonormal completion.
SvdFactors svd(const Eigen::MatrixXd& x);

/// The first `count` right singular vectors as columns (d x count), extended
/// by orthonormal completion when count exceeds min(rows, cols).
Eigen::MatrixXd principal_directions(const SvdFactors& factors, Eigen::Index count,
                                     Eigen::Index ambient_dim);

/// Projects a column-zero-mean matrix onto its top `out_dim` right singular
/// vectors. The optional `basis` output receives the d x out_dim projection
/// matrix itself.
Eigen::MatrixXd pca_project(const Eigen::MatrixXd& centered, Eigen::Index out_dim,
                            Eigen::MatrixXd* basis = nullptr);

/// Square orthogonal matrix; the constructor rejects matrices whose
/// orthogonality defect max|R^T R - I| exceeds 1e-8.
class RotationMatrix {
public:
    explicit RotationMatrix(Eigen::MatrixXd m);

    const Eigen::MatrixXd& matrix() const { return m_; }
    Eigen::Index dim() const { return m_.rows(); }

private:
    Eigen::MatrixXd m_;
};

/// Haar-like random orthogonal matrix: seeded Gaussian entries followed by a
/// Householder QR with the R diagonal normalized positive. Bit-deterministic
/// for a given seed.
RotationMatrix random_orthogonal(Eigen::Index dim, std::uint64_t seed);

/// Closed-form orthogonal Procrustes solution: the orthogonal R minimizing
/// ||codes - data * R||_F^2, built from the SVD of codes^T * data.
RotationMatrix procrustes_rotation(const Eigen::MatrixXd& codes,
                                   const Eigen::MatrixXd& data);

} // namespace binquant::linalg
