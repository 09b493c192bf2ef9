#include "posecoach/gaussian.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "posecoach/error.hpp"

namespace posecoach {

GaussianDensity::GaussianDensity(const Eigen::MatrixXd& cov) : dim_(cov.rows()), llt_(cov) {
    if (cov.rows() != cov.cols() || llt_.info() != Eigen::Success) {
        throw NumericError("covariance matrix is not positive definite");
    }
    const auto diag = llt_.matrixLLT().diagonal();
    if ((diag.array() <= 0.0).any() || !diag.allFinite()) {
        throw NumericError("covariance matrix is not positive definite");
    }
    log_det_ = 2.0 * diag.array().log().sum();
}

double GaussianDensity::log_density(const Eigen::Ref<const Eigen::VectorXd>& centred) const {
    const Eigen::VectorXd z = llt_.matrixL().solve(centred);
    return -0.5 * (static_cast<double>(dim_) * std::log(2.0 * std::numbers::pi) + log_det_ + z.squaredNorm());
}

Eigen::VectorXd GaussianDensity::log_density_columns(const Eigen::Ref<const Eigen::MatrixXd>& centred) const {
    const Eigen::MatrixXd z = llt_.matrixL().solve(centred);
    const double c = static_cast<double>(dim_) * std::log(2.0 * std::numbers::pi) + log_det_;
    return (-0.5 * (z.colwise().squaredNorm().array() + c)).matrix().transpose();
}

Eigen::VectorXd select_entries(const Eigen::Ref<const Eigen::VectorXd>& v, const std::vector<Eigen::Index>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[idx[i]];
    return out;
}

Eigen::MatrixXd select_block(const Eigen::Ref<const Eigen::MatrixXd>& m, const std::vector<Eigen::Index>& idx) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) out(r, c) = m(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
    }
    return out;
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (v.size() == 0) return -std::numeric_limits<double>::infinity();
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((v.array() - m).exp().sum());
}

}  // namespace posecoach
