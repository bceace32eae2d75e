#pragma once

#include <limits>

namespace dpdro {

/// The risk transform phi_beta(t) = beta exp(t/beta) - beta, strictly
/// increasing and convex with phi_beta(0) = 0. beta = infinity is first-class
/// and encodes the identity map, so ambiguity-neutral runs share the robust
/// code path. Finite beta throws PhiOverflowError once t/beta > 700.
class PhiTransform {
public:
    PhiTransform() = default;

    static PhiTransform identity() { return PhiTransform(); }
    static PhiTransform exponential(double beta);

    double operator()(double t) const;
    /// phi'(t) = exp(t/beta), or 1 for the identity.
    double deriv(double t) const;

    bool is_identity() const { return beta_ == std::numeric_limits<double>::infinity(); }
    double beta() const { return beta_; }

private:
    double beta_ = std::numeric_limits<double>::infinity();
};

} // namespace dpdro
