#include "dpdro/datagen.hpp"

#include <cmath>
#include <stdexcept>

namespace dpdro {

EquicorrGaussian::EquicorrGaussian(int dim, double offDiagonal) : dim_(dim), rho_(offDiagonal) {
    if (dim < 1) throw std::invalid_argument("EquicorrGaussian: dim must be >= 1");
    const double low = dim > 1 ? -1.0 / (static_cast<double>(dim) - 1.0) : -1.0;
    if (!(rho_ > low && rho_ < 1.0))
        throw std::invalid_argument("EquicorrGaussian: rho outside the positive-definite range");
    u_ = std::sqrt(1.0 - rho_);
    const double top = std::sqrt(1.0 + (static_cast<double>(dim) - 1.0) * rho_);
    v_ = (top - u_) / static_cast<double>(dim);
}

Eigen::MatrixXd EquicorrGaussian::covariance() const {
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(dim_, dim_, rho_);
    sigma.diagonal().setOnes();
    return sigma;
}

Eigen::VectorXd EquicorrGaussian::sample(Rng& rng) const {
    Eigen::VectorXd x(dim_);
    sample_into(rng, x.transpose());
    return x;
}

void EquicorrGaussian::sample_into(Rng& rng, Eigen::Ref<Eigen::RowVectorXd> row) const {
    double sum = 0.0;
    for (int j = 0; j < dim_; ++j) {
        const double z = rng.normal();
        row[j] = u_ * z;
        sum += z;
    }
    row.array() += v_ * sum;
}

Eigen::VectorXd sparse_ones_coeff(int dim, int active) {
    if (active > dim) throw std::invalid_argument("sparse_ones_coeff: active > dim");
    Eigen::VectorXd coeff = Eigen::VectorXd::Zero(dim);
    coeff.head(active).setOnes();
    return coeff;
}

Dataset gen_sparse_linear(int n, int dim, double rho, double sigma, const Eigen::VectorXd& coeff,
                          Rng& rng) {
    if (coeff.size() != dim) throw std::invalid_argument("gen_sparse_linear: coeff dim mismatch");
    if (!(sigma >= 0.0)) throw std::invalid_argument("gen_sparse_linear: sigma must be >= 0");
    const EquicorrGaussian cov(dim, rho);
    Dataset ds;
    ds.task = TaskKind::Regression;
    ds.X.resize(n, dim);
    ds.y.resize(n);
    for (int i = 0; i < n; ++i) {
        cov.sample_into(rng, ds.X.row(i));
        ds.y[i] = ds.X.row(i).dot(coeff) + sigma * rng.normal();
    }
    return ds;
}

Dataset gen_sparse_logistic(int n, int dim, double rho, const Eigen::VectorXd& coeff, Rng& rng) {
    if (coeff.size() != dim)
        throw std::invalid_argument("gen_sparse_logistic: coeff dim mismatch");
    const EquicorrGaussian cov(dim, rho);
    Dataset ds;
    ds.task = TaskKind::BinaryLabel;
    ds.X.resize(n, dim);
    ds.y.resize(n);
    for (int i = 0; i < n; ++i) {
        cov.sample_into(rng, ds.X.row(i));
        const double p = 1.0 / (1.0 + std::exp(-ds.X.row(i).dot(coeff)));
        ds.y[i] = rng.uniform() < p ? 1.0 : -1.0;
    }
    return ds;
}

TwoGroupDraw gen_two_group_linear(int n, int p, double rho, double sigma, double c, Rng& rng) {
    if (!(c > 0.0)) throw std::invalid_argument("gen_two_group_linear: c must be > 0");
    if (p < 5) throw std::invalid_argument("gen_two_group_linear: p must be >= 5");

    // Joint draw of the 2 x 5 active coefficients: 1 + sqrt(c) * w with
    // w ~ N(0, V), V unit-diagonal and 0.3 off-diagonal.
    const EquicorrGaussian coeffCov(10, 0.3);
    const Eigen::VectorXd w = coeffCov.sample(rng);
    TwoGroupDraw out;
    out.coeff1 = Eigen::VectorXd::Zero(p);
    out.coeff2 = Eigen::VectorXd::Zero(p);
    const double root = std::sqrt(c);
    for (int j = 0; j < 5; ++j) {
        out.coeff1[j] = 1.0 + root * w[j];
        out.coeff2[j] = 1.0 + root * w[5 + j];
    }
    out.data.groups.push_back(gen_sparse_linear(n, p, rho, sigma, out.coeff1, rng));
    out.data.groups.push_back(gen_sparse_linear(n, p, rho, sigma, out.coeff2, rng));
    return out;
}

Dataset contaminate(Dataset ds, double fraction, const Eigen::VectorXd& outlierCoeff, double sigma,
                    Rng& rng) {
    if (!(fraction >= 0.0 && fraction < 0.5))
        throw std::invalid_argument("contaminate: fraction must lie in [0, 0.5)");
    if (outlierCoeff.size() != ds.dim())
        throw std::invalid_argument("contaminate: outlierCoeff dim mismatch");
    const auto k =
        static_cast<Eigen::Index>(std::ceil(fraction * static_cast<double>(ds.n())));
    for (Eigen::Index i = ds.n() - k; i < ds.n(); ++i)
        ds.y[i] = ds.X.row(i).dot(outlierCoeff) + sigma * rng.normal();
    return ds;
}

} // namespace dpdro
