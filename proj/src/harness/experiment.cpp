#include "dpdro/harness/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "dpdro/datagen.hpp"
#include "dpdro/errors.hpp"
#include "dpdro/harness/csv.hpp"
#include "dpdro/harness/kfold.hpp"
#include "dpdro/harness/standardize.hpp"

namespace dpdro::harness {

namespace {

// Substream layout. Each replicate owns a 2^20 block; selection simulations
// and CSV pool shuffling live in distant blocks so nothing collides.
constexpr std::uint64_t kBlockShift = 20;
constexpr std::uint64_t kSelectionBlock = 0x40000000ULL;
constexpr std::uint64_t kCsvPoolBlock = 0x80000000ULL;
constexpr std::uint64_t kCvBlock = 0xC0000000ULL;

constexpr std::uint64_t kOffTrain = 0;
constexpr std::uint64_t kOffTest = 1;
constexpr std::uint64_t kOffContaminate = 2;

constexpr std::uint64_t kMethodBlock = 0x10000;
constexpr std::uint64_t kGroupBlock = 0x4000;
constexpr std::uint64_t kSgdOffset = 0x3F00;

RngHandle replicate_base(std::uint64_t seed, std::uint64_t block, std::uint64_t index) {
    return RngHandle{seed, (block + index) << kBlockShift};
}

RngHandle method_base(RngHandle replicate, int methodIndex) {
    return replicate.at(kMethodBlock * static_cast<std::uint64_t>(methodIndex + 1));
}

} // namespace

LossFn ExperimentSpec::loss() const {
    LossFn f;
    f.scale = lossScale;
    switch (task) {
    case TaskType::LinReg: f.kind = LossKind::Squared; break;
    case TaskType::LogReg: f.kind = LossKind::Logistic; break;
    case TaskType::MedReg:
        f.kind = LossKind::Pinball;
        f.quantile = quantile;
        break;
    case TaskType::SmoothHingeSvm: f.kind = LossKind::SmoothHinge; break;
    case TaskType::Svr:
        f.kind = LossKind::EpsInsensitive;
        f.delta = delta;
        break;
    }
    f.validate();
    return f;
}

void ExperimentSpec::validate() const {
    if (methods.empty()) throw ParseError("experiment: needs at least one method");
    if (alphaGrid.empty() || alpha0Grid.empty() || alphaSGrid.empty())
        throw ParseError("experiment: grids must be nonempty");
    if (replications < 1) throw ParseError("experiment: replications must be >= 1");
    if (mc.M < 1 || mc.T < 1 || mc.T0 < 1 || mc.Ts < 1)
        throw ParseError("experiment: Monte Carlo sizes must be >= 1");
    if (mc.M >= static_cast<int>(kSgdOffset))
        throw ParseError("experiment: M too large for the substream layout");
    if (foldCount < 2) throw ParseError("experiment: foldCount must be >= 2");
    loss().validate();
    const bool classification =
        task == TaskType::LogReg || task == TaskType::SmoothHingeSvm;
    if (const auto* syn = std::get_if<SyntheticSource>(&source)) {
        const bool binarySource = syn->kind == SyntheticSource::Kind::SparseLogistic;
        if (classification != binarySource)
            throw ParseError("experiment: task and synthetic source disagree on label type");
    }
}

namespace {

TaskType task_from_string(const std::string& s) {
    if (s == "linreg") return TaskType::LinReg;
    if (s == "logreg") return TaskType::LogReg;
    if (s == "medreg") return TaskType::MedReg;
    if (s == "svm") return TaskType::SmoothHingeSvm;
    if (s == "svr") return TaskType::Svr;
    throw ParseError("spec: unknown task '" + s + "'");
}

std::string task_to_string(TaskType t) {
    switch (t) {
    case TaskType::LinReg: return "linreg";
    case TaskType::LogReg: return "logreg";
    case TaskType::MedReg: return "medreg";
    case TaskType::SmoothHingeSvm: return "svm";
    case TaskType::Svr: return "svr";
    }
    return "linreg";
}

MethodSpec method_from_token(const std::string& token, double beta, double epsilon) {
    MethodSpec m;
    m.label = token;
    m.beta = beta;
    if (token == "dp") m.kind = MethodKind::DpRobust;
    else if (token == "dp_neutral") {
        m.kind = MethodKind::DpRobust;
        m.beta = std::numeric_limits<double>::infinity();
    } else if (token == "dp_separate") m.kind = MethodKind::DpSeparate;
    else if (token == "hdp") m.kind = MethodKind::HdpRobust;
    else if (token == "doro") {
        m.kind = MethodKind::DpDoro;
        m.epsilon = epsilon;
    } else if (token == "erm") m.kind = MethodKind::Erm;
    else if (token == "erm_separate") m.kind = MethodKind::ErmSeparate;
    else if (token == "ols") m.kind = MethodKind::Ols;
    else if (token == "ridge") {
        m.kind = MethodKind::RidgeClosedForm;
        m.beta = std::numeric_limits<double>::infinity();
    } else
        throw ParseError("spec: unknown method '" + token + "'");
    return m;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

ExperimentSpec ExperimentSpec::from_spec_file(const SpecFile& file) {
    ExperimentSpec spec;
    spec.task = task_from_string(file.get_string("task", "linreg"));

    const std::string source = file.get_string("source", "sparse_linear");
    if (source == "csv") {
        CsvSource csv;
        csv.path = file.get_string("csv_path");
        csv.responseColumn = file.get_string("response_column");
        if (file.has("group_column") && !file.get_string("group_column").empty())
            csv.groupColumn = file.get_string("group_column");
        csv.standardize = file.get_bool("standardize", true);
        csv.trainSize = static_cast<int>(file.get_int("train_size", 300));
        spec.source = csv;
    } else {
        SyntheticSource syn;
        if (source == "sparse_linear") syn.kind = SyntheticSource::Kind::SparseLinear;
        else if (source == "sparse_logistic") syn.kind = SyntheticSource::Kind::SparseLogistic;
        else if (source == "two_group_linear") syn.kind = SyntheticSource::Kind::TwoGroupLinear;
        else throw ParseError("spec: unknown source '" + source + "'");
        syn.n = static_cast<int>(file.get_int("n", 100));
        syn.d = static_cast<int>(file.get_int("d", 90));
        syn.rho = file.get_double("rho", 0.3);
        syn.sigma = file.get_double("sigma", 0.5);
        syn.active = static_cast<int>(file.get_int("active_coeffs", 5));
        syn.dependence = file.get_double("dependence_c", 0.2);
        syn.contamination = file.get_double("contamination_fraction", 0.0);
        syn.outlierScale = file.get_double("outlier_scale", -10.0);
        spec.source = syn;
    }

    const double beta = file.get_double("beta", 1.0);
    const double epsilon = file.get_double("epsilon", 0.1);
    for (const auto& token : file.get_strings("methods"))
        spec.methods.push_back(method_from_token(token, beta, epsilon));

    spec.alphaGrid = file.get_doubles("alpha_grid", {1.0});
    spec.alpha0Grid = file.get_doubles("alpha0_grid", {1.0});
    spec.alphaSGrid = file.get_doubles("alphas_grid", {1.0});
    spec.betaGrid = file.get_doubles("beta_grid", {});

    spec.mc.T = static_cast<int>(file.get_int("T", 50));
    spec.mc.T0 = static_cast<int>(file.get_int("T0", 100));
    spec.mc.Ts = static_cast<int>(file.get_int("Ts", 100));
    spec.mc.M = static_cast<int>(file.get_int("M", 300));
    const std::string approx = file.get_string("approx", "md");
    if (approx == "md") spec.mc.approx = DpApprox::MD;
    else if (approx == "sb") spec.mc.approx = DpApprox::SB;
    else throw ParseError("spec: approx must be 'md' or 'sb'");

    spec.sgd.stepA = file.get_double("step_a", 50.0);
    spec.sgd.stepB = file.get_double("step_b", 100.0);
    spec.sgd.passes = static_cast<int>(file.get_int("passes", 20));
    const std::string order = file.get_string("batch_order", "cyclic");
    if (order == "cyclic") spec.sgd.order = BatchOrder::Cyclic;
    else if (order == "shuffled") spec.sgd.order = BatchOrder::ShuffledPerPass;
    else throw ParseError("spec: batch_order must be 'cyclic' or 'shuffled'");

    spec.replications = static_cast<int>(file.get_int("replications", 1));
    spec.testSize = static_cast<int>(file.get_int("test_size", 1000));
    spec.foldCount = static_cast<int>(file.get_int("fold_count", 10));
    spec.selectionReplications =
        static_cast<int>(file.get_int("selection_replications", 10));
    spec.disjointSelectionPool = file.get_bool("disjoint_selection_pool", false);
    spec.lossScale = file.get_double("loss_scale", 1.0);
    spec.quantile = file.get_double("quantile", 0.5);
    spec.delta = file.get_double("delta", 0.0);

    spec.validate();
    return spec;
}

SpecFile ExperimentSpec::to_spec_file() const {
    SpecFile out;
    out.set("task", task_to_string(task));
    if (const auto* csv = std::get_if<CsvSource>(&source)) {
        out.set("source", "csv");
        out.set("csv_path", csv->path);
        out.set("response_column", csv->responseColumn);
        if (csv->groupColumn) out.set("group_column", *csv->groupColumn);
        out.set("standardize", csv->standardize ? "true" : "false");
        out.set("train_size", std::to_string(csv->trainSize));
    } else {
        const auto& syn = std::get<SyntheticSource>(source);
        switch (syn.kind) {
        case SyntheticSource::Kind::SparseLinear: out.set("source", "sparse_linear"); break;
        case SyntheticSource::Kind::SparseLogistic: out.set("source", "sparse_logistic"); break;
        case SyntheticSource::Kind::TwoGroupLinear: out.set("source", "two_group_linear"); break;
        }
        out.set("n", std::to_string(syn.n));
        out.set("d", std::to_string(syn.d));
        out.set("rho", format_double(syn.rho));
        out.set("sigma", format_double(syn.sigma));
        out.set("active_coeffs", std::to_string(syn.active));
        out.set("dependence_c", format_double(syn.dependence));
        out.set("contamination_fraction", format_double(syn.contamination));
        out.set("outlier_scale", format_double(syn.outlierScale));
    }
    std::string tokens;
    for (const auto& m : methods) {
        std::string entry = m.label + ":" + format_double(m.beta);
        if (m.epsilon > 0.0) entry += ":" + format_double(m.epsilon);
        tokens += (tokens.empty() ? "" : ", ") + entry;
    }
    out.set("methods", tokens);
    auto setList = [&out](const std::string& key, const std::vector<double>& values) {
        std::string joined;
        for (double v : values) joined += (joined.empty() ? "" : ", ") + format_double(v);
        if (!joined.empty()) out.set(key, joined);
    };
    setList("alpha_grid", alphaGrid);
    setList("alpha0_grid", alpha0Grid);
    setList("alphas_grid", alphaSGrid);
    setList("beta_grid", betaGrid);
    out.set("T", std::to_string(mc.T));
    out.set("T0", std::to_string(mc.T0));
    out.set("Ts", std::to_string(mc.Ts));
    out.set("M", std::to_string(mc.M));
    out.set("approx", mc.approx == DpApprox::MD ? "md" : "sb");
    out.set("step_a", format_double(sgd.stepA));
    out.set("step_b", format_double(sgd.stepB));
    out.set("passes", std::to_string(sgd.passes));
    out.set("batch_order", sgd.order == BatchOrder::Cyclic ? "cyclic" : "shuffled");
    out.set("replications", std::to_string(replications));
    out.set("test_size", std::to_string(testSize));
    out.set("fold_count", std::to_string(foldCount));
    out.set("selection_replications", std::to_string(selectionReplications));
    out.set("disjoint_selection_pool", disjointSelectionPool ? "true" : "false");
    out.set("loss_scale", format_double(lossScale));
    out.set("quantile", format_double(quantile));
    out.set("delta", format_double(delta));
    return out;
}

Centering default_centering(TaskKind task, Eigen::Index featureDim) {
    const int xiDim = static_cast<int>(featureDim) + 1;
    return task == TaskKind::BinaryLabel ? Centering::product_binary_normal(xiDim)
                                         : Centering::standard_normal(xiDim);
}

DiscreteMeasure empirical_measure(const Dataset& ds) {
    if (ds.n() == 0) throw std::invalid_argument("empirical_measure: empty dataset");
    DiscreteMeasure m;
    m.atomX = ds.X;
    m.atomY = ds.y;
    m.weights = Eigen::VectorXd::Constant(ds.n(), 1.0 / static_cast<double>(ds.n()));
    m.origin.assign(static_cast<std::size_t>(ds.n()), AtomOrigin::TrainData);
    return m;
}

namespace {

PhiTransform phi_for(double beta) {
    return std::isinf(beta) ? PhiTransform::identity() : PhiTransform::exponential(beta);
}

SgdConfig sgd_config(const ExperimentSpec& spec, Eigen::Index dim, double epsilon) {
    SgdConfig cfg;
    cfg.theta0 = Eigen::VectorXd::Zero(dim);
    cfg.stepA = spec.sgd.stepA;
    cfg.stepB = spec.sgd.stepB;
    cfg.passes = spec.sgd.passes;
    cfg.order = spec.sgd.order;
    cfg.epsilon = epsilon;
    return cfg;
}

Eigen::VectorXd least_squares(const Dataset& data) {
    return data.X.colPivHouseholderQr().solve(data.y);
}

Eigen::VectorXd fit_dp_single(const ExperimentSpec& spec, const Dataset& train, double alpha,
                              double beta, double epsilon, RngHandle rng) {
    DpSpec prior;
    prior.concentration = alpha;
    prior.centering = default_centering(train.task, train.dim());
    auto criterion =
        build_dp_criterion(prior, std::make_shared<Dataset>(train), spec.mc.T, spec.mc.M,
                           spec.mc.approx, phi_for(beta), spec.loss(), rng);
    const SgdConfig cfg = sgd_config(spec, train.dim(), epsilon);
    const FitReport report = epsilon > 0.0 ? run_doro_sgd(criterion, cfg, rng.at(kSgdOffset))
                                           : run_sgd(criterion, cfg, rng.at(kSgdOffset));
    return report.thetaFinal;
}

Eigen::VectorXd fit_erm_single(const ExperimentSpec& spec, const Dataset& train, RngHandle rng) {
    if (spec.task == TaskType::LinReg) return least_squares(train);
    ApproxCriterion criterion;
    criterion.measures.push_back(empirical_measure(train));
    criterion.phi = PhiTransform::identity();
    criterion.loss = spec.loss();
    SgdConfig cfg = sgd_config(spec, train.dim(), 0.0);
    // One measure: spend the same step budget as a robust fit.
    cfg.passes = spec.sgd.passes * spec.mc.M;
    return run_sgd(criterion, cfg, rng.at(kSgdOffset)).thetaFinal;
}

} // namespace

FittedModel fit_method(const MethodSpec& method, const ExperimentSpec& spec,
                       const GroupedDataset& train, const HyperParams& hp, RngHandle rng) {
    train.validate();
    const int S = train.group_count();
    if (S > 4) throw ParseError("experiment: substream layout supports at most 4 groups");
    FittedModel model;
    model.thetaPerGroup.resize(static_cast<std::size_t>(S));

    auto groupRng = [&](int s) { return rng.at(kGroupBlock * static_cast<std::uint64_t>(s)); };
    auto broadcast = [&](const Eigen::VectorXd& theta) {
        for (auto& t : model.thetaPerGroup) t = theta;
    };

    switch (method.kind) {
    case MethodKind::Ols:
        if (spec.task != TaskType::LinReg)
            throw ParseError("experiment: ols requires the squared loss (linreg)");
        broadcast(least_squares(train.pooled()));
        return model;
    case MethodKind::RidgeClosedForm:
        if (spec.task != TaskType::LinReg)
            throw ParseError("experiment: ridge requires the squared loss (linreg)");
        broadcast(ridge_closed_form(train.pooled(), hp.alpha));
        return model;
    case MethodKind::Erm:
        broadcast(fit_erm_single(spec, train.pooled(), groupRng(0)));
        return model;
    case MethodKind::ErmSeparate:
        for (int s = 0; s < S; ++s)
            model.thetaPerGroup[static_cast<std::size_t>(s)] =
                fit_erm_single(spec, train.groups[static_cast<std::size_t>(s)], groupRng(s));
        return model;
    case MethodKind::DpRobust:
    case MethodKind::DpDoro:
        broadcast(fit_dp_single(spec, train.pooled(), hp.alpha, hp.beta,
                                method.kind == MethodKind::DpDoro ? method.epsilon : 0.0,
                                groupRng(0)));
        return model;
    case MethodKind::DpSeparate:
        for (int s = 0; s < S; ++s)
            model.thetaPerGroup[static_cast<std::size_t>(s)] =
                fit_dp_single(spec, train.groups[static_cast<std::size_t>(s)], hp.alpha, hp.beta,
                              0.0, groupRng(s));
        return model;
    case MethodKind::HdpRobust: {
        HdpSpec hdp;
        hdp.topConcentration = hp.alpha0;
        hdp.groupConcentrations.assign(static_cast<std::size_t>(S), hp.alphaS);
        hdp.topCentering = default_centering(train.task(), train.dim());
        auto shared = std::make_shared<const GroupedDataset>(train);
        for (int s = 0; s < S; ++s) {
            auto criterion =
                build_hdp_criterion(hdp, shared, s, spec.mc.T0, spec.mc.Ts, spec.mc.M,
                                    spec.mc.approx, phi_for(hp.beta), spec.loss(), groupRng(s));
            const SgdConfig cfg = sgd_config(spec, train.dim(), 0.0);
            model.thetaPerGroup[static_cast<std::size_t>(s)] =
                run_sgd(criterion, cfg, groupRng(s).at(kSgdOffset)).thetaFinal;
        }
        return model;
    }
    }
    throw std::logic_error("fit_method: unknown method kind");
}

MetricsRow evaluate_model(const FittedModel& model, const GroupedDataset& test,
                          const LossFn& loss, const std::vector<Eigen::VectorXd>* truth) {
    test.validate();
    const auto S = static_cast<std::size_t>(test.group_count());
    if (model.thetaPerGroup.size() != S)
        throw std::invalid_argument("evaluate_model: group count mismatch");

    MetricsRow row;
    double lossSum = 0.0;
    double sqSum = 0.0;
    double count = 0.0;
    double norm = 0.0;
    double dist = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        const auto& g = test.groups[s];
        const auto& theta = model.thetaPerGroup[s];
        const Eigen::VectorXd z = g.X * theta;
        for (Eigen::Index i = 0; i < g.n(); ++i) {
            lossSum += loss.value(z[i], g.y[i]);
            const double r = g.y[i] - z[i];
            sqSum += r * r;
        }
        count += static_cast<double>(g.n());
        norm += theta.norm();
        if (truth) dist += (theta - (*truth)[s]).squaredNorm();
    }
    row.testRisk = lossSum / count;
    if (test.task() == TaskKind::Regression) row.rmse = std::sqrt(sqSum / count);
    if (truth) row.distanceToTruth = dist / static_cast<double>(S);
    row.coeffNorm = norm / static_cast<double>(S);
    return row;
}

namespace {

struct GeneratedData {
    GroupedDataset train;
    GroupedDataset test;
    std::vector<Eigen::VectorXd> truth;
};

GeneratedData generate(const SyntheticSource& src, int testSize, RngHandle base) {
    GeneratedData out;
    Rng trainRng(base.at(kOffTrain));
    Rng testRng(base.at(kOffTest));
    switch (src.kind) {
    case SyntheticSource::Kind::SparseLinear: {
        const Eigen::VectorXd coeff = sparse_ones_coeff(src.d, src.active);
        Dataset train = gen_sparse_linear(src.n, src.d, src.rho, src.sigma, coeff, trainRng);
        if (src.contamination > 0.0) {
            Rng contamRng(base.at(kOffContaminate));
            train = contaminate(std::move(train), src.contamination,
                                Eigen::VectorXd::Constant(src.d, src.outlierScale), src.sigma,
                                contamRng);
        }
        out.train.groups.push_back(std::move(train));
        out.test.groups.push_back(
            gen_sparse_linear(testSize, src.d, src.rho, src.sigma, coeff, testRng));
        out.truth = {coeff};
        return out;
    }
    case SyntheticSource::Kind::SparseLogistic: {
        const Eigen::VectorXd coeff = sparse_ones_coeff(src.d, src.active);
        out.train.groups.push_back(gen_sparse_logistic(src.n, src.d, src.rho, coeff, trainRng));
        out.test.groups.push_back(gen_sparse_logistic(testSize, src.d, src.rho, coeff, testRng));
        out.truth = {coeff};
        return out;
    }
    case SyntheticSource::Kind::TwoGroupLinear: {
        TwoGroupDraw draw =
            gen_two_group_linear(src.n, src.d, src.rho, src.sigma, src.dependence, trainRng);
        out.test.groups.push_back(
            gen_sparse_linear(testSize, src.d, src.rho, src.sigma, draw.coeff1, testRng));
        out.test.groups.push_back(
            gen_sparse_linear(testSize, src.d, src.rho, src.sigma, draw.coeff2, testRng));
        out.train = std::move(draw.data);
        out.truth = {draw.coeff1, draw.coeff2};
        return out;
    }
    }
    throw std::logic_error("generate: unknown synthetic source");
}

bool better_point(double riskA, const HyperParams& a, double riskB, const HyperParams& b) {
    if (riskA != riskB) return riskA < riskB;
    if (a.alpha != b.alpha) return a.alpha < b.alpha;
    if (a.alpha0 != b.alpha0) return a.alpha0 < b.alpha0;
    if (a.alphaS != b.alphaS) return a.alphaS < b.alphaS;
    return a.beta > b.beta;
}

std::vector<HyperParams> enumerate_grid(const ExperimentSpec& spec, const MethodSpec& method) {
    const std::vector<double> betas =
        spec.betaGrid.empty() ? std::vector<double>{method.beta} : spec.betaGrid;
    std::vector<HyperParams> grid;
    if (method.needs_hdp_alphas()) {
        for (double a0 : spec.alpha0Grid)
            for (double as : spec.alphaSGrid)
                for (double b : betas) grid.push_back({spec.alphaGrid.front(), a0, as, b});
    } else if (method.needs_alpha()) {
        for (double a : spec.alphaGrid)
            for (double b : betas)
                grid.push_back({a, spec.alpha0Grid.front(), spec.alphaSGrid.front(), b});
    } else {
        grid.push_back({spec.alphaGrid.front(), spec.alpha0Grid.front(), spec.alphaSGrid.front(),
                        method.beta});
    }
    return grid;
}

double guarded_fit_risk(const MethodSpec& method, const ExperimentSpec& spec,
                        const GroupedDataset& train, const GroupedDataset& heldOut,
                        const HyperParams& hp, RngHandle rng) {
    try {
        const FittedModel model = fit_method(method, spec, train, hp, rng);
        return evaluate_model(model, heldOut, spec.loss(), nullptr).testRisk;
    } catch (const ParseError&) {
        throw;
    } catch (const IoError&) {
        throw;
    } catch (const std::runtime_error&) {
        // Divergence, overflow, non-finite losses: score the point as useless.
        return std::numeric_limits<double>::infinity();
    }
}

} // namespace

CvResult cross_validate(const ExperimentSpec& spec, const GroupedDataset& ds, RngHandle rng) {
    spec.validate();
    ds.validate();
    const MethodSpec* target = nullptr;
    for (const auto& m : spec.methods)
        if (m.needs_alpha() || m.needs_hdp_alphas()) {
            target = &m;
            break;
        }
    if (!target) target = &spec.methods.front();

    for (const auto& g : ds.groups)
        if (g.n() < spec.foldCount)
            throw ParseError("cross_validate: a group has fewer rows than folds");

    const bool standardize = [&] {
        const auto* csv = std::get_if<CsvSource>(&spec.source);
        return csv && csv->standardize;
    }();

    // One fold assignment per group, fixed across all grid points.
    Rng splitRng(rng);
    std::vector<std::vector<std::vector<Eigen::Index>>> folds;
    for (const auto& g : ds.groups) folds.push_back(kfold_indices(g.n(), spec.foldCount, splitRng));

    const std::vector<HyperParams> grid = enumerate_grid(spec, *target);
    CvResult result;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        double total = 0.0;
        for (int f = 0; f < spec.foldCount; ++f) {
            GroupedDataset train, validation;
            for (std::size_t s = 0; s < ds.groups.size(); ++s) {
                std::vector<Eigen::Index> trainRows;
                for (int g = 0; g < spec.foldCount; ++g)
                    if (g != f)
                        trainRows.insert(trainRows.end(),
                                         folds[s][static_cast<std::size_t>(g)].begin(),
                                         folds[s][static_cast<std::size_t>(g)].end());
                train.groups.push_back(ds.groups[s].take(trainRows));
                validation.groups.push_back(
                    ds.groups[s].take(folds[s][static_cast<std::size_t>(f)]));
            }
            if (standardize) {
                Standardizer st;
                st.fit(train.pooled());
                for (auto& g : train.groups) st.apply(g);
                for (auto& g : validation.groups) st.apply(g);
            }
            const auto index = gi * static_cast<std::size_t>(spec.foldCount) +
                               static_cast<std::size_t>(f);
            total += guarded_fit_risk(*target, spec, train, validation, grid[gi],
                                      rng.at((static_cast<std::uint64_t>(index) + 1)
                                             << kBlockShift));
        }
        result.table.push_back({grid[gi], total / static_cast<double>(spec.foldCount)});
    }
    // Pick the winner with the documented tie-breaking.
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.table.size(); ++i)
        if (better_point(result.table[i].meanValidationRisk, result.table[i].params,
                         result.table[best].meanValidationRisk, result.table[best].params))
            best = i;
    result.chosen = result.table[best].params;
    return result;
}

namespace {

struct CsvContext {
    GroupedDataset selectionPool; // rows the hyperparameter search may use, raw
    GroupedDataset evalPool;      // rows the evaluation folds come from, raw
    GroupedDataset heldOut;       // everything outside the pool, raw
    std::vector<std::vector<std::vector<Eigen::Index>>> folds; // per group, per fold of evalPool
    bool standardize = false;
};

CsvContext prepare_csv(const ExperimentSpec& spec, const CsvSource& src, std::uint64_t seed) {
    const GroupedDataset raw =
        ingest_csv(src.path, src.responseColumn, src.groupColumn, /*standardize=*/false);
    CsvContext ctx;
    ctx.standardize = src.standardize;
    for (std::size_t s = 0; s < raw.groups.size(); ++s) {
        const auto& g = raw.groups[s];
        Rng rng(replicate_base(seed, kCsvPoolBlock, s));
        std::vector<Eigen::Index> perm(static_cast<std::size_t>(g.n()));
        std::iota(perm.begin(), perm.end(), Eigen::Index{0});
        for (std::size_t i = perm.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.below(i));
            std::swap(perm[i - 1], perm[j]);
        }
        const auto take = std::min<Eigen::Index>(src.trainSize, g.n());
        std::vector<Eigen::Index> poolRows(perm.begin(), perm.begin() + take);
        std::vector<Eigen::Index> restRows(perm.begin() + take, perm.end());
        if (restRows.empty())
            throw ParseError("experiment: no held-out rows left for testing");
        const Dataset pool = g.take(poolRows);
        if (spec.disjointSelectionPool) {
            // First half selects hyperparameters, second half feeds the folds.
            ctx.selectionPool.groups.push_back(pool.slice(0, pool.n() / 2));
            ctx.evalPool.groups.push_back(pool.slice(pool.n() / 2, pool.n()));
        } else {
            ctx.selectionPool.groups.push_back(pool);
            ctx.evalPool.groups.push_back(pool);
        }
        const auto evalRows = ctx.evalPool.groups.back().n();
        if (evalRows < spec.foldCount)
            throw ParseError("experiment: training pool smaller than fold count");
        ctx.heldOut.groups.push_back(g.take(restRows));
        ctx.folds.push_back(kfold_indices(evalRows, spec.foldCount, rng));
    }
    return ctx;
}

} // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, std::uint64_t seed, int threads) {
    spec.validate();
    ExperimentResult result;
    {
        std::ostringstream hex;
        hex << std::hex << spec.to_spec_file().digest();
        result.specDigest = hex.str();
    }

    const auto* csvSrc = std::get_if<CsvSource>(&spec.source);
    const auto* synSrc = std::get_if<SyntheticSource>(&spec.source);
    std::optional<CsvContext> csv;
    if (csvSrc) csv = prepare_csv(spec, *csvSrc, seed);

    // Hyperparameter selection per tunable method. Synthetic sources use
    // fresh selection simulations; CSV pools use k-fold cross-validation.
    for (const auto& method : spec.methods) {
        HyperParams chosen{spec.alphaGrid.front(), spec.alpha0Grid.front(),
                           spec.alphaSGrid.front(), method.beta};
        const std::vector<HyperParams> grid = enumerate_grid(spec, method);
        if (grid.size() > 1) {
            std::vector<double> totals(grid.size(), 0.0);
            if (synSrc) {
                for (int i = 0; i < spec.selectionReplications; ++i) {
                    const RngHandle base = replicate_base(
                        seed, kSelectionBlock, static_cast<std::uint64_t>(i));
                    const GeneratedData data = generate(*synSrc, spec.testSize, base);
                    for (std::size_t gi = 0; gi < grid.size(); ++gi)
                        totals[gi] += guarded_fit_risk(
                            method, spec, data.train, data.test, grid[gi],
                            method_base(base, static_cast<int>(gi % 14)));
                }
                std::size_t best = 0;
                for (std::size_t gi = 1; gi < grid.size(); ++gi)
                    if (better_point(totals[gi], grid[gi], totals[best], grid[best])) best = gi;
                chosen = grid[best];
            } else {
                ExperimentSpec cvSpec = spec;
                cvSpec.methods = {method};
                chosen = cross_validate(cvSpec, csv->selectionPool,
                                        RngHandle{seed, kCvBlock << kBlockShift})
                             .chosen;
            }
        }
        result.chosen[method.label] = chosen;
    }

    const int reps = csvSrc ? spec.foldCount : spec.replications;
    std::vector<std::vector<MetricsRow>> rowsByReplicate(static_cast<std::size_t>(reps));
    std::vector<std::string> errors(static_cast<std::size_t>(reps));

    auto runReplicate = [&](int r) {
        const RngHandle base = replicate_base(seed, 0, static_cast<std::uint64_t>(r));
        GroupedDataset train, test;
        std::vector<Eigen::VectorXd> truth;
        bool hasTruth = false;
        if (synSrc) {
            GeneratedData data = generate(*synSrc, spec.testSize, base);
            train = std::move(data.train);
            test = std::move(data.test);
            truth = std::move(data.truth);
            hasTruth = true;
        } else {
            // Replicate r trains on fold r of the pool, tests on the held-out
            // rows; standardization statistics come from the training fold.
            for (std::size_t s = 0; s < csv->evalPool.groups.size(); ++s) {
                const auto& fold = csv->folds[s][static_cast<std::size_t>(r)];
                train.groups.push_back(csv->evalPool.groups[s].take(fold));
                test.groups.push_back(csv->heldOut.groups[s]);
            }
            if (csv->standardize) {
                Standardizer st;
                st.fit(train.pooled());
                for (auto& g : train.groups) st.apply(g);
                for (auto& g : test.groups) st.apply(g);
            }
        }
        for (std::size_t k = 0; k < spec.methods.size(); ++k) {
            const auto& method = spec.methods[k];
            const FittedModel model = fit_method(method, spec, train,
                                                 result.chosen.at(method.label),
                                                 method_base(base, static_cast<int>(k)));
            MetricsRow row = evaluate_model(model, test, spec.loss(),
                                            hasTruth ? &truth : nullptr);
            row.replicate = r;
            row.method = method.label;
            rowsByReplicate[static_cast<std::size_t>(r)].push_back(std::move(row));
        }
    };

    const int workers = std::max(1, threads);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int r = next.fetch_add(1);
            if (r >= reps) return;
            try {
                runReplicate(r);
            } catch (const std::exception& e) {
                errors[static_cast<std::size_t>(r)] =
                    "replicate " + std::to_string(r) + ": " + e.what();
                rowsByReplicate[static_cast<std::size_t>(r)].clear();
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (int r = 0; r < reps; ++r) {
        if (!errors[static_cast<std::size_t>(r)].empty())
            result.replicateErrors.push_back(errors[static_cast<std::size_t>(r)]);
        for (auto& row : rowsByReplicate[static_cast<std::size_t>(r)])
            result.rows.push_back(std::move(row));
    }
    return result;
}

} // namespace dpdro::harness
