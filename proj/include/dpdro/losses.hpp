#pragma once

#include <Eigen/Dense>

namespace dpdro {

enum class LossKind { Squared, Logistic, SmoothHinge, Pinball, EpsInsensitive };

/// One labelled point; y is a real response for regression kinds and a
/// {-1, +1} label for Logistic / SmoothHinge.
struct Observation {
    Eigen::VectorXd x;
    double y = 0.0;
};

/// Per-observation loss h(theta, xi) with analytic gradient in theta.
///
/// All kinds factor through the linear score z = theta' x, so the gradient is
/// always zgrad(z, y) * x; measure-level sums exploit this with two matrix
/// products.
struct LossFn {
    LossKind kind = LossKind::Squared;
    double scale = 1.0;    // multiplicative prefactor
    double quantile = 0.5; // Pinball only, in (0, 1)
    double delta = 0.0;    // EpsInsensitive tube half-width, >= 0

    void validate() const;
    bool is_classification() const {
        return kind == LossKind::Logistic || kind == LossKind::SmoothHinge;
    }

    /// Loss value given the linear score z = theta' x.
    double value(double z, double y) const;
    /// d(value)/dz. Subgradient selection at kinks: Pinball at residual 0 and
    /// EpsInsensitive at the tube boundary return 0; SmoothHinge is C^1.
    double zgrad(double z, double y) const;
};

double loss_eval(const LossFn& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& x, double y);
Eigen::VectorXd loss_grad(const LossFn& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& x,
                          double y);

inline double loss_eval(const LossFn& f, const Eigen::VectorXd& theta, const Observation& obs) {
    return loss_eval(f, theta, obs.x, obs.y);
}
inline Eigen::VectorXd loss_grad(const LossFn& f, const Eigen::VectorXd& theta,
                                 const Observation& obs) {
    return loss_grad(f, theta, obs.x, obs.y);
}

} // namespace dpdro
