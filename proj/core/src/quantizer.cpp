#include "binquant/quantizer.hpp"

#include <fstream>
#include <iomanip>

#include "binquant/errors.hpp"

namespace binquant::quantizer {

namespace {

struct ResolvedConfig {
    Eigen::Index out_dim;
};

ResolvedConfig validate(const EmbeddingMatrix& input, const CompressionConfig& config,
                        Method expected) {
    if (config.method != expected) {
        throw ParameterError("compression method does not match the requested pipeline");
    }
    if (config.iterations < 0) {
        throw ParameterError("iteration count must be non-negative");
    }
    const Eigen::Index d = input.dim();
    const Eigen::Index out_dim = config.out_dim == 0 ? d : config.out_dim;
    if (out_dim < 1 || out_dim > d) {
        throw ParameterError("output dimension must be in [1, " + std::to_string(d) + "]");
    }
    if (expected == Method::IIQ) {
        const Eigen::Index rank_bound = std::min<Eigen::Index>(input.data().rows(), d);
        if (config.remove_top < 0 || config.remove_top >= rank_bound) {
            throw ParameterError("remove-top count must be in [0, " +
                                 std::to_string(rank_bound - 1) + "]");
        }
    }
    return {out_dim};
}

} // namespace

Eigen::MatrixXd sign_matrix(const Eigen::MatrixXd& m) {
    return (m.array() >= 0.0).select(Eigen::MatrixXd::Ones(m.rows(), m.cols()),
                                     -Eigen::MatrixXd::Ones(m.rows(), m.cols()));
}

Eigen::MatrixXd remove_top_singular(const Eigen::MatrixXd& centered, Eigen::Index count) {
    const Eigen::Index k = std::min(centered.rows(), centered.cols());
    if (count < 0 || count > k) {
        throw ParameterError("remove-top count must be in [0, " + std::to_string(k) + "]");
    }
    if (count == 0) {
        return centered;
    }
    const linalg::SvdFactors f = linalg::svd(centered);
    Eigen::VectorXd truncated = f.singular_values;
    truncated.head(count).setZero();
    return f.left * truncated.asDiagonal() * f.right;
}

ItqProjection itq_projection(const Eigen::MatrixXd& centered, Eigen::Index out_dim) {
    ItqProjection result;
    result.projected = linalg::pca_project(centered, out_dim, &result.basis);
    return result;
}

MinimizeResult minimize_quantization(const Eigen::MatrixXd& data, int iterations,
                                     std::uint64_t seed) {
    if (data.rows() < 1 || data.cols() < 1) {
        throw DimensionError("minimize_quantization: empty matrix");
    }
    if (iterations < 0) {
        throw ParameterError("iteration count must be non-negative");
    }
    linalg::RotationMatrix rotation = linalg::random_orthogonal(data.cols(), seed);
    std::vector<double> losses;
    losses.reserve(static_cast<std::size_t>(iterations));
    for (int it = 0; it < iterations; ++it) {
        const Eigen::MatrixXd rotated = data * rotation.matrix();
        const Eigen::MatrixXd codes = sign_matrix(rotated);
        losses.push_back((codes - rotated).squaredNorm());
        rotation = linalg::procrustes_rotation(codes, data);
    }
    Eigen::MatrixXd codes = sign_matrix(data * rotation.matrix());
    return {std::move(codes),
            QuantizationTrace{std::move(losses), std::move(rotation),
                              Eigen::VectorXd(), Eigen::MatrixXd()}};
}

double quantization_loss(const Eigen::MatrixXd& codes, const Eigen::MatrixXd& data,
                         const linalg::RotationMatrix& rotation) {
    if (data.cols() != rotation.dim() || codes.rows() != data.rows() ||
        codes.cols() != rotation.dim()) {
        throw DimensionError("quantization_loss: shape mismatch");
    }
    return (codes - data * rotation.matrix()).squaredNorm();
}

CompressResult iiq_compress(const EmbeddingMatrix& input, const CompressionConfig& config) {
    const auto resolved = validate(input, config, Method::IIQ);
    const Eigen::Index d = input.dim();

    auto centered = linalg::mean_center(input.data());

    Eigen::MatrixXd isotropized;
    Eigen::MatrixXd projector;
    if (config.remove_top == 0) {
        isotropized = std::move(centered.data);
        projector = Eigen::MatrixXd::Identity(d, d);
    } else {
        const linalg::SvdFactors f = linalg::svd(centered.data);
        Eigen::VectorXd truncated = f.singular_values;
        truncated.head(config.remove_top).setZero();
        isotropized = f.left * truncated.asDiagonal() * f.right;
        Eigen::VectorXd mask = Eigen::VectorXd::Ones(f.singular_values.size());
        mask.head(config.remove_top).setZero();
        projector = f.right.transpose() * mask.asDiagonal() * f.right;
    }

    Eigen::MatrixXd quantizer_input;
    Eigen::MatrixXd projection;
    if (resolved.out_dim < d) {
        Eigen::MatrixXd basis;
        quantizer_input = linalg::pca_project(isotropized, resolved.out_dim, &basis);
        projection = projector * basis;
    } else {
        quantizer_input = std::move(isotropized);
        projection = std::move(projector);
    }

    MinimizeResult minimized =
        minimize_quantization(quantizer_input, config.iterations, config.seed);
    BinaryEmbedding packed = BinaryEmbedding::from_signs(input.vocab(), minimized.codes);
    minimized.trace.mean = std::move(centered.mean);
    minimized.trace.projection = std::move(projection);
    return {std::move(packed), std::move(minimized.trace)};
}

CompressResult itq_compress(const EmbeddingMatrix& input, const CompressionConfig& config) {
    const auto resolved = validate(input, config, Method::ITQ);

    auto centered = linalg::mean_center(input.data());
    ItqProjection projected = itq_projection(centered.data, resolved.out_dim);

    MinimizeResult minimized =
        minimize_quantization(projected.projected, config.iterations, config.seed);
    BinaryEmbedding packed = BinaryEmbedding::from_signs(input.vocab(), minimized.codes);
    minimized.trace.mean = std::move(centered.mean);
    minimized.trace.projection = std::move(projected.basis);
    return {std::move(packed), std::move(minimized.trace)};
}

CompressResult compress(const EmbeddingMatrix& input, const CompressionConfig& config) {
    return config.method == Method::IIQ ? iiq_compress(input, config)
                                        : itq_compress(input, config);
}

void save_loss_curve(const std::vector<double>& losses, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open loss-curve file: " + path.string());
    }
    out << "iteration,loss\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < losses.size(); ++i) {
        out << (i + 1) << ',' << losses[i] << '\n';
    }
    out.flush();
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

} // namespace binquant::quantizer
