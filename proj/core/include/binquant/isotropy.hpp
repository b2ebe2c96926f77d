#pragma once

#include <Eigen/Core>

namespace binquant::isotropy {

/// Partition function Z(e) = sum_i exp(e . x_i) for a unit direction e,
/// evaluated with a max-shifted exponential sum. Throws RangeError when the
/// result exceeds the double range.
double partition_function(const Eigen::MatrixXd& x, const Eigen::VectorXd& direction);

/// min Z / max Z over the candidate directions {+-q_1, ..., +-q_k}, where the
/// q_i are the right singular vectors of the mean-centered input. Always in
/// [0, 1]. A matrix whose rows are all identical carries no directional
/// signal; the ratio is reported as 1 and `degenerate`, when given, is set.
double isotropy_ratio(const Eigen::MatrixXd& x, bool* degenerate = nullptr);

/// Second-order approximation of the isotropy ratio:
///   (n - |colsum| + sigma_min^2 / 2) / (n + |colsum| + sigma_max^2 / 2)
/// with sigma_min, sigma_max from the thin SVD of the input and |colsum| the
/// Euclidean norm of the column-sum vector. Reported raw, without clamping.
double isotropy_quadratic(const Eigen::MatrixXd& x);

struct IsotropyReport {
    double i_ratio = 0.0;      ///< candidate-set ratio, clamped to [0, 1]
    double i_quadratic = 0.0;  ///< quadratic approximation, unclamped
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    double mean_norm = 0.0;    ///< ||column sums||_2
    bool degenerate = false;   ///< all rows identical after centering
};

IsotropyReport report(const Eigen::MatrixXd& x);

} // namespace binquant::isotropy
