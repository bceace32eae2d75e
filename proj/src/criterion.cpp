#include "dpdro/criterion.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace dpdro {

void ApproxCriterion::validate() const {
    if (measures.empty()) throw std::invalid_argument("ApproxCriterion: needs M >= 1 measures");
    for (const auto& m : measures) {
        m.validate();
        if (m.dim() != dim())
            throw std::invalid_argument("ApproxCriterion: measures disagree on dimension");
    }
    loss.validate();
}

double measure_risk(const DiscreteMeasure& m, const LossFn& loss, const Eigen::VectorXd& theta) {
    if (theta.size() != m.dim())
        throw std::invalid_argument("measure_risk: dim(theta) != atom dimension");
    const Eigen::VectorXd z = m.atomX * theta;
    double risk = 0.0;
    for (Eigen::Index j = 0; j < m.size(); ++j) {
        const double term = loss.value(z[j], m.atomY[j]);
        if (!std::isfinite(term))
            throw std::runtime_error("measure_risk: non-finite loss at atom " + std::to_string(j));
        risk += m.weights[j] * term;
    }
    return risk;
}

double measure_risk_grad(const DiscreteMeasure& m, const LossFn& loss,
                         const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    if (theta.size() != m.dim())
        throw std::invalid_argument("measure_risk_grad: dim(theta) != atom dimension");
    const Eigen::VectorXd z = m.atomX * theta;
    Eigen::VectorXd gfac(m.size());
    double risk = 0.0;
    for (Eigen::Index j = 0; j < m.size(); ++j) {
        const double term = loss.value(z[j], m.atomY[j]);
        if (!std::isfinite(term))
            throw std::runtime_error("measure_risk_grad: non-finite loss at atom " +
                                     std::to_string(j));
        risk += m.weights[j] * term;
        gfac[j] = m.weights[j] * loss.zgrad(z[j], m.atomY[j]);
    }
    grad = m.atomX.transpose() * gfac;
    return risk;
}

double eval_criterion(const ApproxCriterion& c, const Eigen::VectorXd& theta) {
    if (c.measures.empty()) throw std::invalid_argument("eval_criterion: empty criterion");
    double total = 0.0;
    for (int m = 0; m < c.measure_count(); ++m) {
        double risk;
        try {
            risk = measure_risk(c.measures[static_cast<std::size_t>(m)], c.loss, theta);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("eval_criterion: measure " + std::to_string(m) + ": " +
                                     e.what());
        }
        total += c.phi(risk);
    }
    return total / static_cast<double>(c.measure_count());
}

Eigen::VectorXd eval_criterion_grad(const ApproxCriterion& c, const Eigen::VectorXd& theta) {
    if (c.measures.empty()) throw std::invalid_argument("eval_criterion_grad: empty criterion");
    Eigen::VectorXd total = Eigen::VectorXd::Zero(theta.size());
    Eigen::VectorXd grad;
    for (const auto& m : c.measures) {
        const double risk = measure_risk_grad(m, c.loss, theta, grad);
        total += c.phi.deriv(risk) * grad;
    }
    return total / static_cast<double>(c.measure_count());
}

ApproxCriterion build_dp_criterion(const DpSpec& prior, std::shared_ptr<const Dataset> data,
                                   int truncation, int measureCount, DpApprox how,
                                   PhiTransform phi, LossFn loss, RngHandle rng) {
    if (measureCount < 1) throw std::invalid_argument("build_dp_criterion: need M >= 1");
    loss.validate();
    const DpSpec posterior = dp_posterior(prior, std::move(data));
    ApproxCriterion c;
    c.phi = phi;
    c.loss = loss;
    c.measures.reserve(static_cast<std::size_t>(measureCount));
    for (int m = 0; m < measureCount; ++m) {
        Rng engine(rng.at(static_cast<std::uint64_t>(m)));
        c.measures.push_back(dp_approx_draw(posterior, truncation, how, engine));
    }
    return c;
}

ApproxCriterion build_hdp_criterion(const HdpSpec& spec,
                                    std::shared_ptr<const GroupedDataset> data, int s, int t0,
                                    int ts, int measureCount, DpApprox how, PhiTransform phi,
                                    LossFn loss, RngHandle rng) {
    if (measureCount < 1) throw std::invalid_argument("build_hdp_criterion: need M >= 1");
    if (!data) throw std::invalid_argument("build_hdp_criterion: null data");
    data->validate();
    if (s < 0 || s >= data->group_count())
        throw std::invalid_argument("build_hdp_criterion: group index out of range");
    loss.validate();
    if (has_duplicate_rows(*data))
        std::cerr << "[dpdro] warning: duplicate rows across groups; HDP posterior "
                     "characterization assumes diffuse group laws\n";

    auto pooled = std::make_shared<const Dataset>(data->pooled());
    // Alias into the shared GroupedDataset; no copy of the group.
    std::shared_ptr<const Dataset> group(data, &data->groups[static_cast<std::size_t>(s)]);

    ApproxCriterion c;
    c.phi = phi;
    c.loss = loss;
    c.measures.reserve(static_cast<std::size_t>(measureCount));
    for (int m = 0; m < measureCount; ++m) {
        Rng engine(rng.at(static_cast<std::uint64_t>(m)));
        c.measures.push_back(hdp_group_draw(spec, pooled, group, s, t0, ts, how, engine));
    }
    return c;
}

double empirical_risk(const Dataset& data, const LossFn& loss, const Eigen::VectorXd& theta) {
    if (data.n() == 0) throw std::invalid_argument("empirical_risk: empty dataset");
    if (theta.size() != data.dim())
        throw std::invalid_argument("empirical_risk: dim(theta) != dim(x)");
    const Eigen::VectorXd z = data.X * theta;
    double total = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) total += loss.value(z[i], data.y[i]);
    return total / static_cast<double>(data.n());
}

double ambiguity_neutral_dp(const Eigen::VectorXd& theta, const Dataset& data, double alpha,
                            const PriorRiskFn& priorRisk, const LossFn& loss) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("ambiguity_neutral_dp: alpha must be >= 0");
    const auto n = static_cast<double>(data.n());
    if (n == 0.0) return priorRisk(theta);
    if (alpha == 0.0) return empirical_risk(data, loss, theta);
    return n / (alpha + n) * empirical_risk(data, loss, theta) +
           alpha / (alpha + n) * priorRisk(theta);
}

double ambiguity_neutral_hdp(const Eigen::VectorXd& theta, const GroupedDataset& data, int s,
                             double alpha0, double alphaS, const PriorRiskFn& priorRisk,
                             const LossFn& loss) {
    data.validate();
    if (s < 0 || s >= data.group_count())
        throw std::invalid_argument("ambiguity_neutral_hdp: group index out of range");
    const auto& group = data.groups[static_cast<std::size_t>(s)];
    const auto ns = static_cast<double>(group.n());
    const auto n = static_cast<double>(data.total());

    double pooledRisk = 0.0;
    if (n > 0.0) {
        for (const auto& g : data.groups)
            if (g.n() > 0)
                pooledRisk += static_cast<double>(g.n()) / n * empirical_risk(g, loss, theta);
    }
    const double bracket =
        n > 0.0 ? n / (alpha0 + n) * pooledRisk + alpha0 / (alpha0 + n) * priorRisk(theta)
                : priorRisk(theta);
    if (ns == 0.0) return bracket;
    return ns / (alphaS + ns) * empirical_risk(group, loss, theta) +
           alphaS / (alphaS + ns) * bracket;
}

double ridge_objective(const Eigen::VectorXd& theta, const Dataset& data, double alpha) {
    if (data.n() == 0) throw std::invalid_argument("ridge_objective: empty dataset");
    const auto n = static_cast<double>(data.n());
    const Eigen::VectorXd r = data.y - data.X * theta;
    return r.squaredNorm() / n + alpha / n * theta.squaredNorm();
}

Eigen::VectorXd ridge_closed_form(const Dataset& data, double alpha) {
    if (data.n() == 0) throw std::invalid_argument("ridge_closed_form: empty dataset");
    Eigen::MatrixXd gram = data.X.transpose() * data.X;
    gram.diagonal().array() += alpha;
    return gram.ldlt().solve(data.X.transpose() * data.y);
}

PriorRiskFn standard_normal_prior_risk(double scale) {
    return [scale](const Eigen::VectorXd& theta) { return scale * (1.0 + theta.squaredNorm()); };
}

PriorRiskFn mc_prior_risk(const Centering& centering, LossFn loss, int draws, RngHandle rng) {
    if (draws < 1) throw std::invalid_argument("mc_prior_risk: need draws >= 1");
    loss.validate();
    // Freeze the atoms once; the returned function is deterministic in theta.
    auto atoms = std::make_shared<std::vector<Observation>>();
    Rng engine(rng);
    atoms->reserve(static_cast<std::size_t>(draws));
    for (int i = 0; i < draws; ++i) {
        auto d = centering.sample(engine);
        atoms->push_back(Observation{std::move(d.x), d.y});
    }
    return [atoms, loss](const Eigen::VectorXd& theta) {
        double total = 0.0;
        for (const auto& obs : *atoms) total += loss_eval(loss, theta, obs);
        return total / static_cast<double>(atoms->size());
    };
}

} // namespace dpdro
