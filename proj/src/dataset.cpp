#include "dpdro/dataset.hpp"

#include <map>
#include <stdexcept>

namespace dpdro {

void Dataset::validate() const {
    if (X.rows() != y.size())
        throw std::invalid_argument("Dataset: X rows and y length differ");
    if (task == TaskKind::BinaryLabel) {
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            if (y[i] != 1.0 && y[i] != -1.0)
                throw std::invalid_argument("Dataset: BinaryLabel response must be -1 or +1 (row " +
                                            std::to_string(i) + ")");
        }
    }
}

Dataset Dataset::slice(Eigen::Index begin, Eigen::Index end) const {
    Dataset out;
    out.X = X.middleRows(begin, end - begin);
    out.y = y.segment(begin, end - begin);
    out.task = task;
    return out;
}

Dataset Dataset::take(const std::vector<Eigen::Index>& rows) const {
    Dataset out;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
    out.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        out.X.row(static_cast<Eigen::Index>(k)) = X.row(rows[k]);
        out.y[static_cast<Eigen::Index>(k)] = y[rows[k]];
    }
    out.task = task;
    return out;
}

Eigen::Index GroupedDataset::total() const {
    Eigen::Index n = 0;
    for (const auto& g : groups) n += g.n();
    return n;
}

Eigen::Index GroupedDataset::dim() const {
    return groups.empty() ? 0 : groups.front().dim();
}

TaskKind GroupedDataset::task() const {
    return groups.empty() ? TaskKind::Regression : groups.front().task;
}

void GroupedDataset::validate() const {
    if (groups.empty()) throw std::invalid_argument("GroupedDataset: needs at least one group");
    for (const auto& g : groups) {
        g.validate();
        if (g.dim() != dim() || g.task != task())
            throw std::invalid_argument("GroupedDataset: groups must share dim and task kind");
    }
}

Dataset GroupedDataset::pooled() const {
    Dataset out;
    out.X.resize(total(), dim());
    out.y.resize(total());
    out.task = task();
    Eigen::Index at = 0;
    for (const auto& g : groups) {
        out.X.middleRows(at, g.n()) = g.X;
        out.y.segment(at, g.n()) = g.y;
        at += g.n();
    }
    return out;
}

bool has_duplicate_rows(const GroupedDataset& data) {
    // Lexicographic ordering of full rows (y first); ties flag a duplicate.
    std::map<std::vector<double>, int> seen;
    for (const auto& g : data.groups) {
        for (Eigen::Index i = 0; i < g.n(); ++i) {
            std::vector<double> key(static_cast<std::size_t>(g.dim()) + 1);
            key[0] = g.y[i];
            for (Eigen::Index j = 0; j < g.dim(); ++j) key[static_cast<std::size_t>(j) + 1] = g.X(i, j);
            if (!seen.emplace(std::move(key), 1).second) return true;
        }
    }
    return false;
}

} // namespace dpdro
