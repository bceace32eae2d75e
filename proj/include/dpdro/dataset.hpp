#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace dpdro {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class TaskKind { Regression, BinaryLabel };

/// A feature/response sample. For BinaryLabel tasks every response is in
/// {-1, +1}; validate() enforces this.
struct Dataset {
    RowMatrixXd X;     // n x d
    Eigen::VectorXd y; // n
    TaskKind task = TaskKind::Regression;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index dim() const { return X.cols(); }

    void validate() const;

    /// Rows [begin, end) as a new dataset.
    Dataset slice(Eigen::Index begin, Eigen::Index end) const;
    /// Rows picked by index list (used by fold splitting).
    Dataset take(const std::vector<Eigen::Index>& rows) const;
};

/// S >= 1 groups sharing feature dimension and task kind.
struct GroupedDataset {
    std::vector<Dataset> groups;

    int group_count() const { return static_cast<int>(groups.size()); }
    Eigen::Index total() const;
    Eigen::Index dim() const;
    TaskKind task() const;

    void validate() const;

    /// All groups concatenated in order.
    Dataset pooled() const;
};

/// True when any row appears in two places across (or within) groups.
/// Sampling under the HDP assumes diffuse group laws, i.e. no ties.
bool has_duplicate_rows(const GroupedDataset& data);

} // namespace dpdro
