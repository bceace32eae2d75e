#include "dpdro/harness/standardize.hpp"

#include <cmath>
#include <stdexcept>

namespace dpdro::harness {

namespace {

// Sample standard deviation (n - 1 denominator); 1.0 for degenerate columns.
double safe_scale(double sumSq, double n) {
    if (n < 2.0) return 1.0;
    const double s = std::sqrt(sumSq / (n - 1.0));
    return s > 1e-300 ? s : 1.0;
}

} // namespace

void Standardizer::fit(const Dataset& train) {
    if (train.n() == 0) throw std::invalid_argument("Standardizer: empty training data");
    const auto n = static_cast<double>(train.n());
    xMean_ = train.X.colwise().mean();
    Eigen::RowVectorXd sumSq =
        (train.X.rowwise() - xMean_).array().square().colwise().sum().matrix();
    xScale_.resize(train.dim());
    for (Eigen::Index j = 0; j < train.dim(); ++j) xScale_[j] = safe_scale(sumSq[j], n);

    scaleResponse_ = train.task == TaskKind::Regression;
    if (scaleResponse_) {
        yMean_ = train.y.mean();
        yScale_ = safe_scale((train.y.array() - yMean_).square().sum(), n);
    } else {
        yMean_ = 0.0;
        yScale_ = 1.0;
    }
    fitted_ = true;
}

void Standardizer::apply(Dataset& ds) const {
    if (!fitted_) throw std::logic_error("Standardizer: apply before fit");
    if (ds.dim() != xMean_.size())
        throw std::invalid_argument("Standardizer: dimension mismatch");
    ds.X = (ds.X.rowwise() - xMean_).array().rowwise() / xScale_.array();
    if (scaleResponse_) ds.y = (ds.y.array() - yMean_) / yScale_;
}

} // namespace dpdro::harness
