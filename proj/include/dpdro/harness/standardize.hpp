#pragma once

#include "dpdro/dataset.hpp"

namespace dpdro::harness {

/// Column statistics learned on training data and applied to any split, so
/// validation/test rows never leak into the scaling. Features are always
/// standardized; the response only for regression tasks. Constant columns are
/// left unscaled (centered only).
class Standardizer {
public:
    void fit(const Dataset& train);
    void apply(Dataset& ds) const;

    Dataset transformed(Dataset ds) const {
        apply(ds);
        return ds;
    }

private:
    Eigen::RowVectorXd xMean_, xScale_;
    double yMean_ = 0.0, yScale_ = 1.0;
    bool scaleResponse_ = false;
    bool fitted_ = false;
};

} // namespace dpdro::harness
