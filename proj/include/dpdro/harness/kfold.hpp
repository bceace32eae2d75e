#pragma once

#include <vector>

#include "dpdro/dataset.hpp"
#include "dpdro/rng.hpp"

namespace dpdro::harness {

struct FoldSplit {
    Dataset train;
    Dataset validation;
};

/// Random disjoint folds covering the data, sizes differing by at most one;
/// pair k holds (everything but fold k, fold k).
std::vector<FoldSplit> kfold_split(const Dataset& ds, int k, Rng& rng);

/// The shuffled fold membership itself (fold index per assignment order).
std::vector<std::vector<Eigen::Index>> kfold_indices(Eigen::Index n, int k, Rng& rng);

} // namespace dpdro::harness
