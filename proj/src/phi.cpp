#include "dpdro/phi.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dpdro/errors.hpp"

namespace dpdro {

PhiTransform PhiTransform::exponential(double beta) {
    if (std::isnan(beta) || !(beta > 0.0))
        throw std::invalid_argument("PhiTransform: beta must be > 0");
    PhiTransform phi;
    phi.beta_ = beta;
    return phi;
}

double PhiTransform::operator()(double t) const {
    if (is_identity()) return t;
    const double x = t / beta_;
    if (x > 700.0)
        throw PhiOverflowError("phi overflow: t/beta = " + std::to_string(x) + " exceeds 700");
    return beta_ * std::expm1(x);
}

double PhiTransform::deriv(double t) const {
    if (is_identity()) return 1.0;
    const double x = t / beta_;
    if (x > 700.0)
        throw PhiOverflowError("phi' overflow: t/beta = " + std::to_string(x) + " exceeds 700");
    return std::exp(x);
}

} // namespace dpdro
