#include "binquant/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "binquant/errors.hpp"

namespace binquant::linalg {

namespace {

// Deterministic standard-normal source on top of the fixed mt19937_64
// sequence (Box-Muller over 53-bit uniforms).
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log1p(-u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 rng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Orthogonalizes column j of m against columns [0, j) in place and
// normalizes. Returns false when the column collapses.
bool orthonormalize_column(Eigen::MatrixXd& m, Eigen::Index j) {
    for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index i = 0; i < j; ++i) {
            m.col(j) -= m.col(i).dot(m.col(j)) * m.col(i);
        }
    }
    const double norm = m.col(j).norm();
    if (norm < 1e-8) {
        return false;
    }
    m.col(j) /= norm;
    return true;
}

// Replaces column j with a unit basis vector orthogonal to columns [0, j).
// Candidates are tried by increasing overlap with the span so far; since
// j < rows, the best candidate keeps residual norm >= sqrt(1/rows).
void complete_column(Eigen::MatrixXd& m, Eigen::Index j) {
    std::vector<std::pair<double, Eigen::Index>> candidates;
    candidates.reserve(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index candidate = 0; candidate < m.rows(); ++candidate) {
        double overlap = 0.0;
        for (Eigen::Index i = 0; i < j; ++i) {
            overlap += m(candidate, i) * m(candidate, i);
        }
        candidates.emplace_back(overlap, candidate);
    }
    std::sort(candidates.begin(), candidates.end());
    for (const auto& [overlap, candidate] : candidates) {
        m.col(j).setZero();
        m(candidate, j) = 1.0;
        if (orthonormalize_column(m, j)) {
            return;
        }
    }
    throw NumericError("orthonormal completion failed");
}

} // namespace

Centered mean_center(const Eigen::MatrixXd& x) {
    if (x.rows() < 1 || x.cols() < 1) {
        throw DimensionError("mean_center: empty matrix");
    }
    if (!x.allFinite()) {
        throw NumericError("mean_center: non-finite input");
    }
    Eigen::VectorXd mean = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
    // Second pass absorbs the rounding residue of the first.
    const Eigen::VectorXd residue = centered.colwise().mean();
    centered.rowwise() -= residue.transpose();
    mean += residue;
    return {std::move(centered), std::move(mean)};
}

SvdFactors svd(const Eigen::MatrixXd& x) {
    if (x.rows() < 1 || x.cols() < 1) {
        throw DimensionError("svd: empty matrix");
    }
    if (!x.allFinite()) {
        throw NumericError("svd: non-finite input");
    }
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    const Eigen::Index k = std::min(n, d);

    Eigen::MatrixXd gram = x.transpose() * x;
    gram = 0.5 * (gram + gram.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) {
        throw NumericError("svd: eigendecomposition of the Gram matrix failed");
    }

    SvdFactors f;
    f.singular_values.resize(k);
    f.right.resize(k, d);
    f.left.resize(n, k);

    // Eigenvalues come back ascending; take the top k, descending.
    for (Eigen::Index i = 0; i < k; ++i) {
        const Eigen::Index src = d - 1 - i;
        f.singular_values(i) = std::sqrt(std::max(0.0, solver.eigenvalues()(src)));
        f.right.row(i) = solver.eigenvectors().col(src).transpose();
        Eigen::Index arg = 0;
        f.right.row(i).cwiseAbs().maxCoeff(&arg);
        if (f.right(i, arg) < 0.0) {
            f.right.row(i) = -f.right.row(i);
        }
    }

    const double sigma_max = f.singular_values(0);
    const double tol =
        static_cast<double>(std::max(n, d)) * std::numeric_limits<double>::epsilon() * sigma_max;
    for (Eigen::Index i = 0; i < k; ++i) {
        if (f.singular_values(i) > tol && f.singular_values(i) > 0.0) {
            f.left.col(i) = x * f.right.row(i).transpose() / f.singular_values(i);
            if (!orthonormalize_column(f.left, i)) {
                complete_column(f.left, i);
            }
        } else {
            complete_column(f.left, i);
        }
    }
    return f;
}

Eigen::MatrixXd principal_directions(const SvdFactors& factors, Eigen::Index count,
                                     Eigen::Index ambient_dim) {
    const Eigen::Index k = factors.singular_values.size();
    if (count < 1 || count > ambient_dim) {
        throw ParameterError("requested direction count out of range");
    }
    Eigen::MatrixXd basis(ambient_dim, count);
    const Eigen::Index available = std::min(count, k);
    basis.leftCols(available) = factors.right.topRows(available).transpose();
    for (Eigen::Index j = available; j < count; ++j) {
        complete_column(basis, j);
    }
    return basis;
}

Eigen::MatrixXd pca_project(const Eigen::MatrixXd& centered, Eigen::Index out_dim,
                            Eigen::MatrixXd* basis) {
    if (out_dim < 1 || out_dim > centered.cols()) {
        throw ParameterError("pca_project: target dimension out of range");
    }
    const SvdFactors f = svd(centered);
    Eigen::MatrixXd v = principal_directions(f, out_dim, centered.cols());
    Eigen::MatrixXd projected = centered * v;
    if (basis != nullptr) {
        *basis = std::move(v);
    }
    return projected;
}

RotationMatrix::RotationMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() < 1 || m_.rows() != m_.cols()) {
        throw DimensionError("rotation matrix must be square and non-empty");
    }
    const double defect =
        (m_.transpose() * m_ - Eigen::MatrixXd::Identity(m_.rows(), m_.cols()))
            .cwiseAbs()
            .maxCoeff();
    if (!(defect <= 1e-8)) {
        throw NumericError("matrix is not orthogonal (defect " + std::to_string(defect) + ")");
    }
}

RotationMatrix random_orthogonal(Eigen::Index dim, std::uint64_t seed) {
    if (dim < 1) {
        throw ParameterError("rotation dimension must be at least 1");
    }
    GaussianSource gauss(seed);
    Eigen::MatrixXd a(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            a(i, j) = gauss.next();
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < dim; ++j) {
        if (r(j, j) < 0.0) {
            q.col(j) = -q.col(j);
        }
    }
    return RotationMatrix(std::move(q));
}

RotationMatrix procrustes_rotation(const Eigen::MatrixXd& codes, const Eigen::MatrixXd& data) {
    if (codes.rows() != data.rows() || codes.cols() != data.cols()) {
        throw DimensionError("procrustes_rotation: shape mismatch");
    }
    const SvdFactors f = svd(codes.transpose() * data);
    return RotationMatrix(f.right.transpose() * f.left.transpose());
}

} // namespace binquant::linalg
