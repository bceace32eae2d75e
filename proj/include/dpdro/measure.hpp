#pragma once

#include <cstdint>
#include <vector>

#include "dpdro/dataset.hpp"

namespace dpdro {

/// Whether an atom resolved to a training-data row or to a fresh draw from
/// the prior centering. DORO filtering only ever drops TrainData atoms.
enum class AtomOrigin : std::uint8_t { TrainData, PriorDraw };

/// A finitely supported probability measure: one Monte Carlo draw from a
/// truncated DP/HDP posterior. Atom j is (atomY[j], atomX.row(j)) with mass
/// weights[j].
struct DiscreteMeasure {
    RowMatrixXd atomX;  // numAtoms x d
    Eigen::VectorXd atomY;
    Eigen::VectorXd weights;
    std::vector<AtomOrigin> origin;

    Eigen::Index size() const { return weights.size(); }
    Eigen::Index dim() const { return atomX.cols(); }

    /// Enforces: equal lengths >= 1, weights >= 0 summing to 1 within tol.
    void validate(double tol = 1e-12) const;
};

} // namespace dpdro
