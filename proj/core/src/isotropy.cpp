#include "binquant/isotropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "binquant/errors.hpp"
#include "binquant/linalg.hpp"

namespace binquant::isotropy {

namespace {

// log Z(e) with the max-shift trick; assumes a validated direction.
double log_partition(const Eigen::MatrixXd& x, const Eigen::VectorXd& direction) {
    const Eigen::VectorXd scores = x * direction;
    const double shift = scores.maxCoeff();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        acc += std::exp(scores(i) - shift);
    }
    return shift + std::log(acc);
}

void validate_input(const Eigen::MatrixXd& x, const char* op) {
    if (x.rows() < 1 || x.cols() < 1) {
        throw DimensionError(std::string(op) + ": empty matrix");
    }
    if (!x.allFinite()) {
        throw NumericError(std::string(op) + ": non-finite input");
    }
}

} // namespace

double partition_function(const Eigen::MatrixXd& x, const Eigen::VectorXd& direction) {
    validate_input(x, "partition_function");
    if (direction.size() != x.cols()) {
        throw DimensionError("partition_function: direction length does not match columns");
    }
    if (std::abs(direction.norm() - 1.0) > 1e-8) {
        throw ParameterError("partition_function: direction must be a unit vector");
    }
    const double log_z = log_partition(x, direction);
    if (log_z >= std::log(std::numeric_limits<double>::max())) {
        throw RangeError("partition_function: result overflows double range");
    }
    return std::exp(log_z);
}

double isotropy_ratio(const Eigen::MatrixXd& x, bool* degenerate) {
    validate_input(x, "isotropy_ratio");
    if (degenerate != nullptr) {
        *degenerate = false;
    }
    const auto centered = linalg::mean_center(x);
    const linalg::SvdFactors f = linalg::svd(centered.data);

    const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
    if (f.singular_values(0) <= 1e-12 * scale) {
        // All rows identical: no direction distinguishes anything.
        if (degenerate != nullptr) {
            *degenerate = true;
        }
        return 1.0;
    }

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < f.right.rows(); ++i) {
        for (const double sign : {1.0, -1.0}) {
            const Eigen::VectorXd e = sign * f.right.row(i).transpose();
            const double log_z = log_partition(x, e);
            lo = std::min(lo, log_z);
            hi = std::max(hi, log_z);
        }
    }
    return std::exp(lo - hi);
}

double isotropy_quadratic(const Eigen::MatrixXd& x) {
    validate_input(x, "isotropy_quadratic");
    const linalg::SvdFactors f = linalg::svd(x);
    const double n = static_cast<double>(x.rows());
    const double mean_norm = x.colwise().sum().norm();
    const double sigma_min = f.singular_values(f.singular_values.size() - 1);
    const double sigma_max = f.singular_values(0);
    return (n - mean_norm + 0.5 * sigma_min * sigma_min) /
           (n + mean_norm + 0.5 * sigma_max * sigma_max);
}

IsotropyReport report(const Eigen::MatrixXd& x) {
    validate_input(x, "isotropy report");
    IsotropyReport r;
    const linalg::SvdFactors f = linalg::svd(x);
    r.sigma_min = f.singular_values(f.singular_values.size() - 1);
    r.sigma_max = f.singular_values(0);
    r.mean_norm = x.colwise().sum().norm();
    r.i_quadratic = (static_cast<double>(x.rows()) - r.mean_norm + 0.5 * r.sigma_min * r.sigma_min) /
                    (static_cast<double>(x.rows()) + r.mean_norm + 0.5 * r.sigma_max * r.sigma_max);
    r.i_ratio = std::clamp(isotropy_ratio(x, &r.degenerate), 0.0, 1.0);
    return r;
}

} // namespace binquant::isotropy
