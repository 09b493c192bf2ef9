#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>

#include <Eigen/Core>

namespace posecoach::oracle {

/// Minimum path cost over every monotone path from (0,0) to (n-1,m-1) with
/// steps (1,0), (0,1), (1,1), found by enumerating them all. The cost of a
/// path is accumulated from its first cell onwards.
class BruteForceDtw {
public:
    explicit BruteForceDtw(const Eigen::MatrixXd& cost) : cost_(cost) {}

    double min_cost() {
        best_ = std::numeric_limits<double>::infinity();
        paths_ = 0;
        walk(0, 0, cost_(0, 0));
        return best_;
    }

    std::size_t paths_enumerated() const { return paths_; }

private:
    void walk(Eigen::Index i, Eigen::Index j, double acc) {
        const Eigen::Index n = cost_.rows();
        const Eigen::Index m = cost_.cols();
        if (i == n - 1 && j == m - 1) {
            ++paths_;
            best_ = std::min(best_, acc);
            return;
        }
        if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, acc + cost_(i + 1, j + 1));
        if (i + 1 < n) walk(i + 1, j, acc + cost_(i + 1, j));
        if (j + 1 < m) walk(i, j + 1, acc + cost_(i, j + 1));
    }

    Eigen::MatrixXd cost_;
    double best_ = 0.0;
    std::size_t paths_ = 0;
};

}  // namespace posecoach::oracle
