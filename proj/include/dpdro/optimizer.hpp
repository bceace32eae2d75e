#pragma once

#include <vector>

#include "dpdro/criterion.hpp"
#include "dpdro/rng.hpp"

namespace dpdro {

enum class BatchOrder { Cyclic, ShuffledPerPass };

/// Schedule and filtering level for the robustly weighted SGD loop. Step t
/// (1-based) uses eta_t = stepA / (stepB + sqrt(t)). epsilon is the DORO
/// contamination level; 0 disables filtering.
struct SgdConfig {
    Eigen::VectorXd theta0;
    double stepA = 1.0;
    double stepB = 1.0;
    int passes = 1;
    BatchOrder order = BatchOrder::Cyclic;
    double epsilon = 0.0;

    void validate() const;
};

struct FitReport {
    Eigen::VectorXd thetaFinal;
    /// Criterion recorded before the first pass and after each pass
    /// (passes + 1 entries).
    std::vector<double> criterionTrajectory;
    long stepsTaken = 0;
    /// Number of TrainData atoms dropped at each step; all zero when
    /// filtering is off.
    std::vector<int> filteredCounts;
};

/// One update theta - eta * phi'(risk_m) * sum_j p_j grad h(theta, xi_j)
/// using measure m (0-based).
Eigen::VectorXd sgd_step(const ApproxCriterion& c, const Eigen::VectorXd& theta, int m,
                         double eta);

/// passes * M steps over the measures; Cyclic visits them in order, and
/// ShuffledPerPass draws a fresh permutation from rng each pass. Throws
/// DivergenceError when the recorded criterion exceeds 1e6x its initial
/// value. Any epsilon in cfg is ignored (no filtering).
FitReport run_sgd(const ApproxCriterion& c, const SgdConfig& cfg, RngHandle rng = {});

/// As run_sgd, but at each step the worst-fitting ceil(epsilon * #TrainData)
/// training atoms of the selected measure are dropped (PriorDraw atoms are
/// always kept) and the remaining weights renormalized before the update.
/// With epsilon = 0 the trajectory is bit-identical to run_sgd.
FitReport run_doro_sgd(const ApproxCriterion& c, const SgdConfig& cfg, RngHandle rng = {});

} // namespace dpdro
