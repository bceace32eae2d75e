#include "dpdro/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dpdro/errors.hpp"

namespace dpdro {

void SgdConfig::validate() const {
    if (theta0.size() == 0) throw std::invalid_argument("SgdConfig: theta0 must be set");
    if (!(stepA > 0.0) || !(stepB > 0.0))
        throw std::invalid_argument("SgdConfig: step constants must be > 0");
    if (passes < 1) throw std::invalid_argument("SgdConfig: passes must be >= 1");
    if (!(epsilon >= 0.0 && epsilon < 0.5))
        throw std::invalid_argument("SgdConfig: epsilon must lie in [0, 0.5)");
}

Eigen::VectorXd sgd_step(const ApproxCriterion& c, const Eigen::VectorXd& theta, int m,
                         double eta) {
    if (m < 0 || m >= c.measure_count())
        throw std::invalid_argument("sgd_step: measure index out of range");
    Eigen::VectorXd grad;
    const double risk =
        measure_risk_grad(c.measures[static_cast<std::size_t>(m)], c.loss, theta, grad);
    Eigen::VectorXd next = theta - eta * c.phi.deriv(risk) * grad;
    if (!next.allFinite()) throw std::runtime_error("sgd_step: non-finite gradient update");
    return next;
}

namespace {

// Update using measure m with the worst-fitting dropCount TrainData atoms
// removed and the surviving weights renormalized.
void filtered_step(const DiscreteMeasure& m, const ApproxCriterion& c, Eigen::VectorXd& theta,
                   double eta, int dropCount) {
    const Eigen::VectorXd z = m.atomX * theta;
    std::vector<Eigen::Index> train;
    for (Eigen::Index j = 0; j < m.size(); ++j)
        if (m.origin[static_cast<std::size_t>(j)] == AtomOrigin::TrainData) train.push_back(j);

    if (dropCount >= static_cast<int>(train.size()))
        throw std::runtime_error("doro: epsilon drops every TrainData atom of the measure");

    std::vector<double> losses(static_cast<std::size_t>(m.size()));
    for (Eigen::Index j = 0; j < m.size(); ++j) {
        losses[static_cast<std::size_t>(j)] = c.loss.value(z[j], m.atomY[j]);
        if (!std::isfinite(losses[static_cast<std::size_t>(j)]))
            throw std::runtime_error("doro: non-finite loss at atom " + std::to_string(j));
    }

    // Worst dropCount training atoms; ties broken by atom index via stable sort.
    std::stable_sort(train.begin(), train.end(), [&](Eigen::Index a, Eigen::Index b) {
        return losses[static_cast<std::size_t>(a)] > losses[static_cast<std::size_t>(b)];
    });
    std::vector<char> dropped(static_cast<std::size_t>(m.size()), 0);
    for (int k = 0; k < dropCount; ++k) dropped[static_cast<std::size_t>(train[static_cast<std::size_t>(k)])] = 1;

    double kept = 0.0;
    for (Eigen::Index j = 0; j < m.size(); ++j)
        if (!dropped[static_cast<std::size_t>(j)]) kept += m.weights[j];
    if (!(kept > 0.0)) throw std::runtime_error("doro: surviving atoms carry zero mass");

    double risk = 0.0;
    Eigen::VectorXd gfac = Eigen::VectorXd::Zero(m.size());
    for (Eigen::Index j = 0; j < m.size(); ++j) {
        if (dropped[static_cast<std::size_t>(j)]) continue;
        const double w = m.weights[j] / kept;
        risk += w * losses[static_cast<std::size_t>(j)];
        gfac[j] = w * c.loss.zgrad(z[j], m.atomY[j]);
    }
    theta -= eta * c.phi.deriv(risk) * (m.atomX.transpose() * gfac).eval();
}

FitReport run_internal(const ApproxCriterion& c, const SgdConfig& cfg, RngHandle rng,
                       double epsilon) {
    c.validate();
    cfg.validate();
    if (cfg.theta0.size() != c.dim())
        throw std::invalid_argument("run_sgd: dim(theta0) != criterion dimension");

    const int mCount = c.measure_count();
    FitReport report;
    report.thetaFinal = cfg.theta0;
    report.filteredCounts.reserve(static_cast<std::size_t>(cfg.passes) *
                                  static_cast<std::size_t>(mCount));

    const double initial = eval_criterion(c, report.thetaFinal);
    report.criterionTrajectory.push_back(initial);
    const double divergeAt = 1e6 * std::max(std::abs(initial), 1e-8);

    Rng shuffler(rng);
    std::vector<int> order(static_cast<std::size_t>(mCount));
    std::iota(order.begin(), order.end(), 0);

    long t = 0;
    for (int pass = 0; pass < cfg.passes; ++pass) {
        if (cfg.order == BatchOrder::ShuffledPerPass) {
            for (std::size_t i = order.size(); i > 1; --i) {
                const auto j = static_cast<std::size_t>(shuffler.below(i));
                std::swap(order[i - 1], order[j]);
            }
        }
        for (int k = 0; k < mCount; ++k) {
            ++t;
            const double eta = cfg.stepA / (cfg.stepB + std::sqrt(static_cast<double>(t)));
            const auto& m = c.measures[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];

            int trainCount = 0;
            int drop = 0;
            if (epsilon > 0.0) {
                for (auto o : m.origin)
                    if (o == AtomOrigin::TrainData) ++trainCount;
                drop = static_cast<int>(std::ceil(epsilon * static_cast<double>(trainCount)));
            }
            if (drop > 0) {
                filtered_step(m, c, report.thetaFinal, eta, drop);
            } else {
                Eigen::VectorXd grad;
                const double risk = measure_risk_grad(m, c.loss, report.thetaFinal, grad);
                report.thetaFinal -= eta * c.phi.deriv(risk) * grad;
            }
            if (!report.thetaFinal.allFinite())
                throw DivergenceError("run_sgd: parameters became non-finite at step " +
                                      std::to_string(t));
            report.filteredCounts.push_back(drop);
        }
        const double value = eval_criterion(c, report.thetaFinal);
        report.criterionTrajectory.push_back(value);
        if (!std::isfinite(value) || value > divergeAt)
            throw DivergenceError("run_sgd: criterion " + std::to_string(value) + " after pass " +
                                  std::to_string(pass + 1) + " exceeds 1e6 x initial " +
                                  std::to_string(initial));
    }
    report.stepsTaken = t;
    return report;
}

} // namespace

FitReport run_sgd(const ApproxCriterion& c, const SgdConfig& cfg, RngHandle rng) {
    return run_internal(c, cfg, rng, 0.0);
}

FitReport run_doro_sgd(const ApproxCriterion& c, const SgdConfig& cfg, RngHandle rng) {
    for (const auto& m : c.measures) {
        if (m.origin.size() != static_cast<std::size_t>(m.size()))
            throw std::invalid_argument("run_doro_sgd: measures must carry origin flags");
    }
    return run_internal(c, cfg, rng, cfg.epsilon);
}

} // namespace dpdro
