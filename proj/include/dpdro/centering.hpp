#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "dpdro/dataset.hpp"
#include "dpdro/measure.hpp"
#include "dpdro/rng.hpp"

namespace dpdro {

class Rng;

/// A sampleable centering measure over observations xi = (y, x). Draws report
/// whether they resolved to a training row (needed for origin flags): a
/// mixture draw first picks the component by weight, then samples within it,
/// and is TrainData exactly when the resolved leaf is empirical data or a
/// TrainData atom of a previously drawn measure.
class Centering {
public:
    struct Draw {
        double y = 0.0;
        Eigen::VectorXd x;
        AtomOrigin origin = AtomOrigin::PriorDraw;
    };

    /// Uniform over the rows of a dataset.
    static Centering empirical(std::shared_ptr<const Dataset> data);
    /// xi = (y, x) ~ N(0, I_xiDim): y scalar, x in R^{xiDim-1}.
    static Centering standard_normal(int xiDim);
    /// y uniform on {-1, +1} independent of x ~ N(0, I_{xiDim-1}).
    static Centering product_binary_normal(int xiDim);
    /// Weighted atoms of an already drawn discrete measure (HDP second stage).
    static Centering measure_atoms(std::shared_ptr<const DiscreteMeasure> measure);
    /// Convex combination of centerings; weights must be >= 0 and sum to 1.
    static Centering mixture(std::vector<std::pair<double, Centering>> parts);

    /// Defaults to the scalar standard normal (xi dimension 1).
    Centering() = default;

    Draw sample(Rng& rng) const;

    /// Dimension of the x part of a draw.
    Eigen::Index feature_dim() const;

private:
    enum class Kind { Empirical, StandardNormal, ProductBinaryNormal, MeasureAtoms, Mixture };

    Kind kind_ = Kind::StandardNormal;
    Eigen::Index xdim_ = 0;
    std::shared_ptr<const Dataset> data_;
    std::shared_ptr<const DiscreteMeasure> measure_;
    std::vector<double> weights_;
    std::vector<std::shared_ptr<const Centering>> parts_;
};

} // namespace dpdro
