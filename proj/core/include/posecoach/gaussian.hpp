#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace posecoach {

/// Multivariate normal with a cached Cholesky factor. Evaluates log-densities
/// of already-centred vectors (the caller supplies x - mean in whatever chart
/// the mean lives in).
class GaussianDensity {
public:
    /// Throws NumericError when `cov` is not positive definite.
    explicit GaussianDensity(const Eigen::MatrixXd& cov);

    Eigen::Index dim() const { return dim_; }
    double log_density(const Eigen::Ref<const Eigen::VectorXd>& centred) const;
    /// One log-density per column.
    Eigen::VectorXd log_density_columns(const Eigen::Ref<const Eigen::MatrixXd>& centred) const;
    double log_determinant() const { return log_det_; }

private:
    Eigen::Index dim_ = 0;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double log_det_ = 0.0;
};

Eigen::VectorXd select_entries(const Eigen::Ref<const Eigen::VectorXd>& v, const std::vector<Eigen::Index>& idx);
/// Principal sub-block: the covariance of the marginal over `idx`.
Eigen::MatrixXd select_block(const Eigen::Ref<const Eigen::MatrixXd>& m, const std::vector<Eigen::Index>& idx);

/// ln(sum exp(v)), stable for large magnitudes.
double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace posecoach
