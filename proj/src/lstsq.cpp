#include "bhct/lstsq.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace bhct {

LstsqResult solve_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    const Eigen::Index n = a.cols();
    Eigen::VectorXd scale = a.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < n; ++j)
        if (scale(j) == 0.0) scale(j) = 1.0;
    const Eigen::MatrixXd an = a * scale.cwiseInverse().asDiagonal();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(an);
    LstsqResult r;
    r.rank = qr.rank();
    r.coef = qr.solve(b).cwiseQuotient(scale);

    const Eigen::MatrixXd rfac = qr.matrixR().topLeftCorner(n, n).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(rfac);
    const auto& sv = svd.singularValues();
    r.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                           : std::numeric_limits<double>::infinity();

    const Eigen::VectorXd res = b - a * r.coef;
    r.residual_rms = std::sqrt(res.squaredNorm() / std::max<Eigen::Index>(1, b.size()));
    const double ss_tot = (b.array() - b.mean()).square().sum();
    r.r2 = ss_tot > 0.0 ? 1.0 - res.squaredNorm() / ss_tot : 1.0;
    return r;
}

}  // namespace bhct
