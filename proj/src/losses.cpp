#include "dpdro/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace dpdro {

namespace {

// log(1 + exp(t)) without overflow.
double log1pexp(double t) {
    if (t > 0.0) return t + std::log1p(std::exp(-t));
    return std::log1p(std::exp(t));
}

} // namespace

void LossFn::validate() const {
    if (!(scale > 0.0)) throw std::invalid_argument("LossFn: scale must be > 0");
    if (kind == LossKind::Pinball && !(quantile > 0.0 && quantile < 1.0))
        throw std::invalid_argument("LossFn: quantile must lie in (0, 1)");
    if (kind == LossKind::EpsInsensitive && !(delta >= 0.0))
        throw std::invalid_argument("LossFn: delta must be >= 0");
}

double LossFn::value(double z, double y) const {
    switch (kind) {
    case LossKind::Squared: {
        const double r = y - z;
        return scale * r * r;
    }
    case LossKind::Logistic:
        return scale * log1pexp(-y * z);
    case LossKind::SmoothHinge: {
        const double m = y * z;
        if (m <= 0.0) return scale * (0.5 - m);
        if (m < 1.0) return scale * 0.5 * (1.0 - m) * (1.0 - m);
        return 0.0;
    }
    case LossKind::Pinball: {
        // Normalized so quantile 0.5 gives |y - z|.
        const double r = y - z;
        return scale * 2.0 * (r >= 0.0 ? quantile * r : (quantile - 1.0) * r);
    }
    case LossKind::EpsInsensitive: {
        const double a = std::abs(y - z) - delta;
        return a > 0.0 ? scale * a : 0.0;
    }
    }
    throw std::logic_error("LossFn: unknown kind");
}

double LossFn::zgrad(double z, double y) const {
    switch (kind) {
    case LossKind::Squared:
        return -2.0 * scale * (y - z);
    case LossKind::Logistic:
        // d/dz log(1+exp(-y z)) = -y / (1 + exp(y z))
        return -scale * y / (1.0 + std::exp(y * z));
    case LossKind::SmoothHinge: {
        const double m = y * z;
        if (m <= 0.0) return -scale * y;
        if (m < 1.0) return -scale * y * (1.0 - m);
        return 0.0;
    }
    case LossKind::Pinball: {
        const double r = y - z;
        if (r > 0.0) return -scale * 2.0 * quantile;
        if (r < 0.0) return scale * 2.0 * (1.0 - quantile);
        return 0.0;
    }
    case LossKind::EpsInsensitive: {
        const double r = y - z;
        if (r > delta) return -scale;
        if (r < -delta) return scale;
        return 0.0;
    }
    }
    throw std::logic_error("LossFn: unknown kind");
}

double loss_eval(const LossFn& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& x,
                 double y) {
    if (theta.size() != x.size())
        throw std::invalid_argument("loss_eval: dim(theta) != dim(x)");
    return f.value(theta.dot(x), y);
}

Eigen::VectorXd loss_grad(const LossFn& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& x,
                          double y) {
    if (theta.size() != x.size())
        throw std::invalid_argument("loss_grad: dim(theta) != dim(x)");
    return f.zgrad(theta.dot(x), y) * x;
}

} // namespace dpdro
