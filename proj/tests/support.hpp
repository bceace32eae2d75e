#pragma once

// Shared oracles for the test suites: finite differences, closed-form
// measures, and simple statistics. Everything here is independent of the
// library's own gradient / criterion code paths.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "dpdro/dataset.hpp"
#include "dpdro/measure.hpp"

namespace testsupport {

/// Central finite-difference gradient of f at theta.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& theta, double h = 1e-6) {
    Eigen::VectorXd g(theta.size());
    Eigen::VectorXd t = theta;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const double orig = t[i];
        t[i] = orig + h;
        const double up = f(t);
        t[i] = orig - h;
        const double down = f(t);
        t[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

inline double rel_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
    const double scale = std::max(want.norm(), 1e-12);
    return (got - want).norm() / scale;
}

/// Finite measure whose squared-loss risk equals the standard-normal prior
/// risk exactly: sum_j w_j (y_j - x_j' theta)^2 = 1 + ||theta||^2 for every
/// theta. Built from 2(d+1) moment-matching atoms.
inline dpdro::DiscreteMeasure gaussian_moment_measure(Eigen::Index d) {
    using namespace dpdro;
    const Eigen::Index count = 2 * (d + 1);
    const double c = std::sqrt(static_cast<double>(d) + 1.0);
    DiscreteMeasure m;
    m.atomX = RowMatrixXd::Zero(count, d);
    m.atomY = Eigen::VectorXd::Zero(count);
    m.weights = Eigen::VectorXd::Constant(count, 1.0 / static_cast<double>(count));
    m.origin.assign(static_cast<std::size_t>(count), AtomOrigin::PriorDraw);
    m.atomY[0] = c;
    m.atomY[1] = -c;
    for (Eigen::Index j = 0; j < d; ++j) {
        m.atomX(2 + 2 * j, j) = c;
        m.atomX(3 + 2 * j, j) = -c;
    }
    return m;
}

struct RunningStat {
    double sum = 0.0, sumSq = 0.0;
    long n = 0;
    void add(double v) {
        sum += v;
        sumSq += v * v;
        ++n;
    }
    double mean() const { return sum / static_cast<double>(n); }
    double variance() const {
        const double m = mean();
        return sumSq / static_cast<double>(n) - m * m;
    }
    double std_error() const { return std::sqrt(variance() / static_cast<double>(n)); }
};

/// One-sided sign test: true when `wins` successes out of `n` paired trials
/// reject p = 1/2 at the 95% level (normal approximation).
inline bool sign_test_wins(long wins, long n) {
    const double z = (static_cast<double>(wins) - 0.5 * static_cast<double>(n)) /
                     std::sqrt(0.25 * static_cast<double>(n));
    return z > 1.6449;
}

} // namespace testsupport
