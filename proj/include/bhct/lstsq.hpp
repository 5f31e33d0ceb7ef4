#pragma once

#include <Eigen/Core>

namespace bhct {

struct LstsqResult {
    Eigen::VectorXd coef;
    double condition = 0.0;     // 2-norm condition of the column-normalised design
    double residual_rms = 0.0;  // RMS of b - A coef
    double r2 = 0.0;            // coefficient of determination against the mean of b
    Eigen::Index rank = 0;
};

/// Least squares by column-pivoted Householder QR on the column-normalised
/// design matrix.  The condition number comes from the singular values of
/// the triangular factor.
LstsqResult solve_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

}  // namespace bhct
