#include "posecoach/linear_svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "posecoach/error.hpp"

namespace posecoach {

LinearSvm train_linear_svm(const Eigen::MatrixXd& x, std::span<const int> y, const SvmOptions& options) {
    const auto n = x.rows();
    const auto d = x.cols();
    if (n == 0) throw DataError("linear SVM: no training samples");
    if (static_cast<std::size_t>(n) != y.size()) throw DataError("linear SVM: label count does not match samples");
    if (!(options.c > 0.0)) throw UsageError("linear SVM: C must be positive");
    for (int label : y) {
        if (label != 1 && label != -1) throw DataError("linear SVM: labels must be +1 or -1");
    }

    // augmented weights: the last entry multiplies a constant 1 feature
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
    std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
    std::vector<double> qii(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) qii[static_cast<std::size_t>(i)] = x.row(i).squaredNorm() + 1.0;

    const double c = options.c;
    for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
        double max_violation = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto si = static_cast<std::size_t>(i);
            const double yi = y[si];
            const double g = yi * (x.row(i).dot(w.head(d)) + w[d]) - 1.0;
            double pg = g;
            if (alpha[si] == 0.0) {
                pg = std::min(g, 0.0);
            } else if (alpha[si] == c) {
                pg = std::max(g, 0.0);
            }
            max_violation = std::max(max_violation, std::abs(pg));
            if (pg == 0.0) continue;
            const double old = alpha[si];
            alpha[si] = std::clamp(old - g / qii[si], 0.0, c);
            const double delta = (alpha[si] - old) * yi;
            w.head(d) += delta * x.row(i).transpose();
            w[d] += delta;
        }
        if (max_violation < options.tolerance) break;
    }
    return {w.head(d), w[d]};
}

double PlattScaling::probability(double decision) const {
    const double z = a * decision + b;
    // evaluated on the side that cannot overflow
    return z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
}

PlattScaling fit_platt(std::span<const double> decisions, std::span<const int> y) {
    if (decisions.size() != y.size() || decisions.empty()) throw DataError("Platt scaling: bad input sizes");
    double prior1 = 0.0;
    double prior0 = 0.0;
    for (int label : y) (label > 0 ? prior1 : prior0) += 1.0;
    const double hi = (prior1 + 1.0) / (prior1 + 2.0);
    const double lo = 1.0 / (prior0 + 2.0);
    std::vector<double> t(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) t[i] = y[i] > 0 ? hi : lo;

    double a = 0.0;
    double b = std::log((prior0 + 1.0) / (prior1 + 1.0));
    auto objective = [&](double aa, double bb) {
        double f = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double z = decisions[i] * aa + bb;
            f += z >= 0.0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
        }
        return f;
    };
    constexpr double kSigma = 1e-12;
    constexpr double kMinStep = 1e-10;
    double fval = objective(a, b);
    for (int it = 0; it < 100; ++it) {
        double h11 = kSigma;
        double h22 = kSigma;
        double h21 = 0.0;
        double g1 = 0.0;
        double g2 = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double z = decisions[i] * a + b;
            double p;
            double q;
            if (z >= 0.0) {
                p = std::exp(-z) / (1.0 + std::exp(-z));
                q = 1.0 / (1.0 + std::exp(-z));
            } else {
                p = 1.0 / (1.0 + std::exp(z));
                q = std::exp(z) / (1.0 + std::exp(z));
            }
            const double d2 = p * q;
            h11 += decisions[i] * decisions[i] * d2;
            h22 += d2;
            h21 += decisions[i] * d2;
            const double d1 = t[i] - p;
            g1 += decisions[i] * d1;
            g2 += d1;
        }
        if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;
        double step = 1.0;
        while (step >= kMinStep) {
            const double na = a + step * da;
            const double nb = b + step * db;
            const double nf = objective(na, nb);
            if (nf < fval + 1e-4 * step * gd) {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if (step < kMinStep) break;
    }
    return {a, b};
}

}  // namespace posecoach
