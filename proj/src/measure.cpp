#include "dpdro/measure.hpp"

#include <cmath>
#include <stdexcept>

namespace dpdro {

void DiscreteMeasure::validate(double tol) const {
    const Eigen::Index n = weights.size();
    if (n < 1) throw std::invalid_argument("DiscreteMeasure: needs at least one atom");
    if (atomX.rows() != n || atomY.size() != n || static_cast<Eigen::Index>(origin.size()) != n)
        throw std::invalid_argument("DiscreteMeasure: atom, weight, origin lengths differ");
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (!(weights[j] >= 0.0))
            throw std::invalid_argument("DiscreteMeasure: negative weight at atom " +
                                        std::to_string(j));
        total += weights[j];
    }
    if (std::abs(total - 1.0) > tol)
        throw std::invalid_argument("DiscreteMeasure: weights sum to " + std::to_string(total));
}

} // namespace dpdro
