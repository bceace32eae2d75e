#include "dpdro/harness/kfold.hpp"

#include <numeric>
#include <stdexcept>

namespace dpdro::harness {

std::vector<std::vector<Eigen::Index>> kfold_indices(Eigen::Index n, int k, Rng& rng) {
    if (k < 2) throw std::invalid_argument("kfold: k must be >= 2");
    if (static_cast<Eigen::Index>(k) > n)
        throw std::invalid_argument("kfold: k exceeds the number of rows");

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    for (std::size_t i = perm.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(perm[i - 1], perm[j]);
    }

    // First n % k folds get one extra row.
    std::vector<std::vector<Eigen::Index>> folds(static_cast<std::size_t>(k));
    const Eigen::Index base = n / k;
    const Eigen::Index extra = n % k;
    std::size_t at = 0;
    for (int f = 0; f < k; ++f) {
        const Eigen::Index size = base + (f < extra ? 1 : 0);
        auto& fold = folds[static_cast<std::size_t>(f)];
        fold.reserve(static_cast<std::size_t>(size));
        for (Eigen::Index i = 0; i < size; ++i) fold.push_back(perm[at++]);
    }
    return folds;
}

std::vector<FoldSplit> kfold_split(const Dataset& ds, int k, Rng& rng) {
    const auto folds = kfold_indices(ds.n(), k, rng);
    std::vector<FoldSplit> out;
    out.reserve(folds.size());
    for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<Eigen::Index> trainRows;
        trainRows.reserve(static_cast<std::size_t>(ds.n()) - folds[f].size());
        for (std::size_t g = 0; g < folds.size(); ++g)
            if (g != f) trainRows.insert(trainRows.end(), folds[g].begin(), folds[g].end());
        out.push_back(FoldSplit{ds.take(trainRows), ds.take(folds[f])});
    }
    return out;
}

} // namespace dpdro::harness
