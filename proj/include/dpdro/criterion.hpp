#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "dpdro/dataset.hpp"
#include "dpdro/losses.hpp"
#include "dpdro/measure.hpp"
#include "dpdro/phi.hpp"
#include "dpdro/rng.hpp"
#include "dpdro/sampling.hpp"

namespace dpdro {

/// Monte Carlo approximation of the smooth robust criterion: M posterior
/// draws, a risk transform, and a loss. Evaluates
///   (1/M) sum_m phi( sum_j p_j^m h(theta, xi_j^m) ).
struct ApproxCriterion {
    std::vector<DiscreteMeasure> measures;
    PhiTransform phi;
    LossFn loss;

    int measure_count() const { return static_cast<int>(measures.size()); }
    Eigen::Index dim() const { return measures.empty() ? 0 : measures.front().dim(); }
    void validate() const;
};

/// Weighted risk sum_j p_j h(theta, xi_j) over one measure. Throws on a
/// non-finite loss term, naming the offending atom.
double measure_risk(const DiscreteMeasure& m, const LossFn& loss, const Eigen::VectorXd& theta);

/// Risk together with its gradient sum_j p_j grad h(theta, xi_j).
double measure_risk_grad(const DiscreteMeasure& m, const LossFn& loss,
                         const Eigen::VectorXd& theta, Eigen::VectorXd& grad);

double eval_criterion(const ApproxCriterion& c, const Eigen::VectorXd& theta);

/// Gradient of eval_criterion (average of per-measure robustly weighted
/// gradients, fixed reduction order).
Eigen::VectorXd eval_criterion_grad(const ApproxCriterion& c, const Eigen::VectorXd& theta);

/// measures[m] drawn from the DP posterior of (prior, data), measure m on
/// substream rng.at(m).
ApproxCriterion build_dp_criterion(const DpSpec& prior, std::shared_ptr<const Dataset> data,
                                   int truncation, int measureCount, DpApprox how,
                                   PhiTransform phi, LossFn loss, RngHandle rng);

/// HDP analogue for group s with per-stage truncations t0 / ts. Warns on
/// stderr when duplicate rows violate the diffuse-law assumption.
ApproxCriterion build_hdp_criterion(const HdpSpec& spec,
                                    std::shared_ptr<const GroupedDataset> data, int s, int t0,
                                    int ts, int measureCount, DpApprox how, PhiTransform phi,
                                    LossFn loss, RngHandle rng);

using PriorRiskFn = std::function<double(const Eigen::VectorXd&)>;

/// Posterior-expected risk under the DP: n/(alpha+n) empirical risk +
/// alpha/(alpha+n) prior risk.
double ambiguity_neutral_dp(const Eigen::VectorXd& theta, const Dataset& data, double alpha,
                            const PriorRiskFn& priorRisk, const LossFn& loss);

/// HDP analogue: within-group risk balanced against the pooled/prior bracket.
double ambiguity_neutral_hdp(const Eigen::VectorXd& theta, const GroupedDataset& data, int s,
                             double alpha0, double alphaS, const PriorRiskFn& priorRisk,
                             const LossFn& loss);

/// (1/n) sum_i (y_i - x_i' theta)^2 + (alpha/n) ||theta||^2.
double ridge_objective(const Eigen::VectorXd& theta, const Dataset& data, double alpha);

/// Normal-equations ridge solution (X'X + alpha I)^{-1} X'y.
Eigen::VectorXd ridge_closed_form(const Dataset& data, double alpha);

/// Mean loss over a dataset (the empirical risk).
double empirical_risk(const Dataset& data, const LossFn& loss, const Eigen::VectorXd& theta);

/// Closed-form prior risk for the standard-normal centering with the squared
/// loss: scale * (1 + ||theta||^2).
PriorRiskFn standard_normal_prior_risk(double scale);

/// Monte Carlo prior risk for centerings without a closed form: mean loss
/// over `draws` centering samples.
PriorRiskFn mc_prior_risk(const Centering& centering, LossFn loss, int draws, RngHandle rng);

} // namespace dpdro
