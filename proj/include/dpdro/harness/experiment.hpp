#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dpdro/criterion.hpp"
#include "dpdro/dataset.hpp"
#include "dpdro/harness/spec_file.hpp"
#include "dpdro/losses.hpp"
#include "dpdro/optimizer.hpp"
#include "dpdro/rng.hpp"
#include "dpdro/sampling.hpp"

namespace dpdro::harness {

enum class TaskType { LinReg, LogReg, MedReg, SmoothHingeSvm, Svr };

enum class MethodKind {
    DpRobust,        // DP criterion on the pooled sample
    DpSeparate,      // one DP fit per group
    HdpRobust,       // HDP criterion per group
    DpDoro,          // DP criterion optimized with outlier filtering
    Erm,             // empirical risk on the pooled sample
    ErmSeparate,     // empirical risk per group
    Ols,             // unpenalized least squares, closed form (squared loss)
    RidgeClosedForm, // normal-equations ridge (squared loss)
};

struct MethodSpec {
    std::string label;
    MethodKind kind = MethodKind::Erm;
    double beta = 1.0;    // risk-transform curvature; inf = ambiguity neutral
    double epsilon = 0.0; // DORO contamination level

    bool needs_alpha() const {
        return kind == MethodKind::DpRobust || kind == MethodKind::DpSeparate ||
               kind == MethodKind::DpDoro || kind == MethodKind::RidgeClosedForm;
    }
    bool needs_hdp_alphas() const { return kind == MethodKind::HdpRobust; }
};

struct SyntheticSource {
    enum class Kind { SparseLinear, SparseLogistic, TwoGroupLinear };
    Kind kind = Kind::SparseLinear;
    int n = 100;
    int d = 90;
    double rho = 0.3;
    double sigma = 0.5;
    int active = 5;
    double dependence = 0.2;      // two-group coefficient coupling c
    double contamination = 0.0;   // fraction of rows replaced by outliers
    double outlierScale = -10.0;  // outlier coefficient = scale * ones
};

struct CsvSource {
    std::string path;
    std::string responseColumn;
    std::optional<std::string> groupColumn;
    bool standardize = true;
    int trainSize = 300; // rows drawn into the training pool (per group)
};

struct McConfig {
    int T = 50;   // DP truncation
    int T0 = 100; // HDP top-stage truncation
    int Ts = 100; // HDP group-stage truncation
    int M = 300;  // Monte Carlo measures
    DpApprox approx = DpApprox::MD;
};

struct SgdSettings {
    double stepA = 50.0;
    double stepB = 100.0;
    int passes = 20;
    BatchOrder order = BatchOrder::Cyclic;
};

struct HyperParams {
    double alpha = 1.0;
    double alpha0 = 1.0;
    double alphaS = 1.0;
    double beta = 1.0;
};

struct ExperimentSpec {
    TaskType task = TaskType::LinReg;
    std::variant<SyntheticSource, CsvSource> source;
    std::vector<MethodSpec> methods;
    std::vector<double> alphaGrid{1.0};
    std::vector<double> alpha0Grid{1.0};
    std::vector<double> alphaSGrid{1.0};
    std::vector<double> betaGrid; // empty -> keep each method's own beta
    McConfig mc;
    SgdSettings sgd;
    int replications = 1;
    int testSize = 1000;
    int foldCount = 10;
    int selectionReplications = 10;
    bool disjointSelectionPool = false;
    double lossScale = 1.0;
    double quantile = 0.5;
    double delta = 0.0;

    LossFn loss() const;
    void validate() const;

    static ExperimentSpec from_spec_file(const SpecFile& file);
    /// Canonical key-value image of this spec, used for the report digest.
    SpecFile to_spec_file() const;
};

struct MetricsRow {
    int replicate = 0;
    std::string method;
    double testRisk = 0.0;
    std::optional<double> rmse;            // regression tasks
    std::optional<double> distanceToTruth; // squared L2, truth known
    double coeffNorm = 0.0;
};

/// One fitted parameter vector per group; pooled methods repeat theirs.
struct FittedModel {
    std::vector<Eigen::VectorXd> thetaPerGroup;
};

/// Prior centering used by every robust fit: standard normal over (y, x) for
/// regression tasks, {-1,+1} x normal for classification tasks.
Centering default_centering(TaskKind task, Eigen::Index featureDim);

DiscreteMeasure empirical_measure(const Dataset& ds);

FittedModel fit_method(const MethodSpec& method, const ExperimentSpec& spec,
                       const GroupedDataset& train, const HyperParams& hp, RngHandle rng);

MetricsRow evaluate_model(const FittedModel& model, const GroupedDataset& test,
                          const LossFn& loss, const std::vector<Eigen::VectorXd>* truth);

struct GridPointScore {
    HyperParams params;
    double meanValidationRisk = 0.0;
};

struct CvResult {
    HyperParams chosen;
    std::vector<GridPointScore> table;
};

/// K-fold grid search for the first tunable method in spec.methods. Ties are
/// broken toward the smallest alpha, then alpha0, alphaS, then the largest
/// beta. A diverging grid point scores +infinity.
CvResult cross_validate(const ExperimentSpec& spec, const GroupedDataset& ds, RngHandle rng);

struct ExperimentResult {
    std::vector<MetricsRow> rows;
    std::map<std::string, HyperParams> chosen;     // per tunable method label
    std::vector<std::string> replicateErrors;      // non-fatal, excluded from rows
    std::string specDigest;
};

/// Runs the full protocol: an optional hyperparameter-selection phase
/// (independent simulations for synthetic sources, k-fold CV for CSV pools),
/// then `replications` evaluation replicates fitted and scored on held-out
/// test data. Replicates run concurrently on `threads` threads; output is a
/// deterministic function of (spec, seed).
ExperimentResult run_experiment(const ExperimentSpec& spec, std::uint64_t seed, int threads = 1);

} // namespace dpdro::harness
