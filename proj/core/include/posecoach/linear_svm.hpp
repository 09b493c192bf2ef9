#pragma once

#include <span>

#include <Eigen/Core>

namespace posecoach {

/// Binary linear SVM f(x) = w.x + b.
struct LinearSvm {
    Eigen::VectorXd w;
    double b = 0.0;

    double decision(const Eigen::Ref<const Eigen::VectorXd>& x) const { return w.dot(x) + b; }
};

struct SvmOptions {
    double c = 1.0;
    int max_epochs = 2000;
    /// Stop when the largest projected-gradient violation in an epoch falls below this.
    double tolerance = 1e-6;
};

/// Hinge loss with L2 penalty, solved by dual coordinate descent over the
/// samples in a fixed cyclic order (deterministic). The bias is learned as the
/// weight of a constant feature. Rows of `x` are samples, `y` holds +1/-1.
LinearSvm train_linear_svm(const Eigen::MatrixXd& x, std::span<const int> y, const SvmOptions& options = {});

/// P(y = +1 | f) = 1 / (1 + exp(a f + b)).
struct PlattScaling {
    double a = -1.0;
    double b = 0.0;

    double probability(double decision) const;
};

/// Maximum-likelihood sigmoid fit with the regularized targets and Newton
/// iteration with backtracking of Lin, Lin and Weng's note on Platt scaling.
PlattScaling fit_platt(std::span<const double> decisions, std::span<const int> y);

}  // namespace posecoach
