#pragma once

#include <Eigen/Dense>

namespace epcag {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Euclidean operator norm (largest singular value).
double operator_norm(const Matrix& m);

}  // namespace epcag
