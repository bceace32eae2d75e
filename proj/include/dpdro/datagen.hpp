#pragma once

#include <utility>

#include "dpdro/dataset.hpp"
#include "dpdro/rng.hpp"

namespace dpdro {

/// N(0, Sigma) sampler for the equicorrelation matrix
/// Sigma = (1 - rho) I + rho 11'. Uses the analytic square root
/// u I + v 11' (rank-one update), so no factorization is needed.
class EquicorrGaussian {
public:
    EquicorrGaussian(int dim, double offDiagonal);

    int dim() const { return dim_; }
    double off_diagonal() const { return rho_; }
    Eigen::MatrixXd covariance() const;

    Eigen::VectorXd sample(Rng& rng) const;
    void sample_into(Rng& rng, Eigen::Ref<Eigen::RowVectorXd> row) const;

private:
    int dim_;
    double rho_;
    double u_; // sqrt(1 - rho)
    double v_; // (sqrt(1 + (d-1) rho) - u) / d
};

/// Coefficient vector with k leading ones and zeros elsewhere.
Eigen::VectorXd sparse_ones_coeff(int dim, int active = 5);

/// X_i ~ N(0, Sigma_rho) iid, y_i ~ N(coeff' x_i, sigma^2).
Dataset gen_sparse_linear(int n, int dim, double rho, double sigma, const Eigen::VectorXd& coeff,
                          Rng& rng);

/// X as above; labels y in {-1, +1} with P(y = 1 | x) = 1/(1 + exp(-x'coeff)).
Dataset gen_sparse_logistic(int n, int dim, double rho, const Eigen::VectorXd& coeff, Rng& rng);

struct TwoGroupDraw {
    GroupedDataset data;
    Eigen::VectorXd coeff1;
    Eigen::VectorXd coeff2;
};

/// Two n-row linear-regression groups whose first five coefficients are drawn
/// jointly from N(1_10, c V) with V unit-diagonal and 0.3 off-diagonal; the
/// remaining p - 5 coordinates are zero. c > 0 tunes dependence (smaller =
/// more homogeneous groups).
TwoGroupDraw gen_two_group_linear(int n, int p, double rho, double sigma, double c, Rng& rng);

/// Replaces the responses of the last ceil(fraction * n) rows with draws from
/// y ~ N(outlierCoeff' x, sigma^2), keeping the covariates.
Dataset contaminate(Dataset ds, double fraction, const Eigen::VectorXd& outlierCoeff, double sigma,
                    Rng& rng);

} // namespace dpdro
