// Command-line front end: synthetic experiments, CSV fits, cross-validation,
// contaminated (DORO) runs, and report re-summaries, all driven by key-value
// spec files.

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <thread>

#include "dpdro/errors.hpp"
#include "dpdro/harness/csv.hpp"
#include "dpdro/harness/experiment.hpp"
#include "dpdro/harness/report.hpp"

namespace {

using namespace dpdro;
using namespace dpdro::harness;

constexpr int kExitOk = 0;
constexpr int kExitSpec = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct CommonArgs {
    std::string specPath;
    std::uint64_t seed = 0;
    std::string outPath;
    std::string format = "csv";
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool requireSpec = true) {
    auto* spec = cmd->add_option("--spec", args.specPath, "key = value spec file");
    if (requireSpec) spec->required();
    cmd->add_option("--seed", args.seed, "master seed");
    cmd->add_option("--out", args.outPath, "output path (stdout when omitted)");
    cmd->add_option("--format", args.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--threads", args.threads, "worker threads (0 = hardware)");
}

int effective_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void print_chosen(const ExperimentResult& result) {
    for (const auto& [label, hp] : result.chosen) {
        std::cerr << "selected " << label << ": alpha=" << hp.alpha << " alpha0=" << hp.alpha0
                  << " alphaS=" << hp.alphaS << " beta=" << hp.beta << "\n";
    }
    for (const auto& err : result.replicateErrors) std::cerr << "skipped " << err << "\n";
}

void write_rows(const ExperimentResult& result, const CommonArgs& args) {
    const ReportFormat format =
        args.format == "json" ? ReportFormat::Json : ReportFormat::Csv;
    if (args.outPath.empty()) {
        std::cout << (format == ReportFormat::Json
                          ? render_report_json(result.rows, result.specDigest)
                          : render_rows_csv(result.rows));
    } else {
        emit_report(result.rows, format, args.outPath, result.specDigest);
    }
    // Summary always lands on stderr so the rows stream stays clean.
    for (const auto& [method, s] : summarize(result.rows)) {
        std::cerr << method;
        if (s.testRisk) std::cerr << "  testRisk " << s.testRisk->mean << " +- " << s.testRisk->std;
        if (s.rmse) std::cerr << "  rmse " << s.rmse->mean << " +- " << s.rmse->std;
        if (s.distanceToTruth)
            std::cerr << "  dist2 " << s.distanceToTruth->mean << " +- "
                      << s.distanceToTruth->std;
        std::cerr << "\n";
    }
}

int run_simulate(const CommonArgs& args) {
    const ExperimentSpec spec = ExperimentSpec::from_spec_file(SpecFile::load(args.specPath));
    const ExperimentResult result =
        run_experiment(spec, args.seed, effective_threads(args.threads));
    print_chosen(result);
    if (result.rows.empty()) {
        std::cerr << "numerical failure: every replicate diverged\n";
        return kExitNumeric;
    }
    write_rows(result, args);
    return kExitOk;
}

int run_fit(const CommonArgs& args) {
    const SpecFile file = SpecFile::load(args.specPath);
    ExperimentSpec spec = ExperimentSpec::from_spec_file(file);
    const auto* csv = std::get_if<CsvSource>(&spec.source);
    if (!csv) throw ParseError("fit: spec must use source = csv");

    const GroupedDataset data =
        ingest_csv(csv->path, csv->responseColumn, csv->groupColumn, csv->standardize);
    HyperParams hp{spec.alphaGrid.front(), spec.alpha0Grid.front(), spec.alphaSGrid.front(),
                   spec.methods.front().beta};
    const FittedModel model =
        fit_method(spec.methods.front(), spec, data, hp, RngHandle{args.seed, 0});

    std::ostringstream out;
    for (std::size_t s = 0; s < model.thetaPerGroup.size(); ++s) {
        out << "group " << s << " theta:";
        for (Eigen::Index j = 0; j < model.thetaPerGroup[s].size(); ++j)
            out << ' ' << model.thetaPerGroup[s][j];
        out << '\n';
    }
    const MetricsRow row = evaluate_model(model, data, spec.loss(), nullptr);
    out << "inSampleRisk " << row.testRisk << '\n';
    std::cout << out.str();
    return kExitOk;
}

int run_cv(const CommonArgs& args) {
    const ExperimentSpec spec = ExperimentSpec::from_spec_file(SpecFile::load(args.specPath));
    const auto* csv = std::get_if<CsvSource>(&spec.source);
    if (!csv) throw ParseError("cv: spec must use source = csv");
    const GroupedDataset data =
        ingest_csv(csv->path, csv->responseColumn, csv->groupColumn, /*standardize=*/false);
    const CvResult result = cross_validate(spec, data, RngHandle{args.seed, 0});
    std::ostringstream out;
    out << "alpha,alpha0,alphaS,beta,meanValidationRisk\n";
    for (const auto& point : result.table)
        out << point.params.alpha << ',' << point.params.alpha0 << ',' << point.params.alphaS
            << ',' << point.params.beta << ',' << point.meanValidationRisk << '\n';
    out << "chosen," << result.chosen.alpha << ',' << result.chosen.alpha0 << ','
        << result.chosen.alphaS << ',' << result.chosen.beta << '\n';
    std::cout << out.str();
    return kExitOk;
}

int run_report(const CommonArgs& args, const std::string& rowsPath) {
    const auto rows = load_rows_csv(rowsPath);
    if (rows.empty()) throw ParseError("report: no rows in " + rowsPath);
    const std::string body = args.format == "json"
                                 ? render_report_json(rows, "")
                                 : render_rows_csv(rows);
    if (args.outPath.empty()) {
        std::cout << body;
    } else {
        emit_report(rows, args.format == "json" ? ReportFormat::Json : ReportFormat::Csv,
                    args.outPath, "");
    }
    for (const auto& [method, s] : summarize(rows)) {
        std::cerr << method;
        if (s.testRisk) std::cerr << "  testRisk " << s.testRisk->mean << " +- " << s.testRisk->std;
        std::cerr << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Smooth Bayesian-nonparametric DRO: DP/HDP sampling, robust SGD, DORO"};
    app.require_subcommand(1);

    CommonArgs simArgs, fitArgs, cvArgs, doroArgs, reportArgs;
    std::string rowsPath;

    auto* sim = app.add_subcommand("simulate", "run a synthetic experiment from a spec file");
    add_common(sim, simArgs);
    auto* fit = app.add_subcommand("fit", "single fit on a CSV dataset");
    add_common(fit, fitArgs);
    auto* cv = app.add_subcommand("cv", "k-fold cross-validation over the spec grids");
    add_common(cv, cvArgs);
    auto* doro = app.add_subcommand("doro", "contaminated experiment (DORO vs plain DRO)");
    add_common(doro, doroArgs);
    auto* report = app.add_subcommand("report", "re-summarize an emitted rows file");
    add_common(report, reportArgs, /*requireSpec=*/false);
    report->add_option("--rows", rowsPath, "rows CSV produced by simulate/doro")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitSpec;
    }

    try {
        if (sim->parsed()) return run_simulate(simArgs);
        if (fit->parsed()) return run_fit(fitArgs);
        if (cv->parsed()) return run_cv(cvArgs);
        if (doro->parsed()) return run_simulate(doroArgs);
        if (report->parsed()) return run_report(reportArgs, rowsPath);
    } catch (const ParseError& e) {
        std::cerr << "spec error: " << e.what() << "\n";
        return kExitSpec;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const DivergenceError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const PhiOverflowError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "spec error: " << e.what() << "\n";
        return kExitSpec;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitSpec;
}
