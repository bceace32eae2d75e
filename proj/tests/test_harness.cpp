#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dpdro/datagen.hpp"
#include "dpdro/errors.hpp"
#include "dpdro/harness/csv.hpp"
#include "dpdro/harness/experiment.hpp"
#include "dpdro/harness/kfold.hpp"
#include "dpdro/harness/report.hpp"
#include "dpdro/harness/spec_file.hpp"
#include "dpdro/harness/standardize.hpp"

using namespace dpdro;
using namespace dpdro::harness;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << body;
}

MethodSpec method(const std::string& label, MethodKind kind, double beta = 1.0,
                  double epsilon = 0.0) {
    MethodSpec m;
    m.label = label;
    m.kind = kind;
    m.beta = beta;
    m.epsilon = epsilon;
    return m;
}

} // namespace

TEST_CASE("csv parser handles RFC 4180 quoting") {
    std::istringstream in("a,b,c\n1,\"two, with comma\",3\n\"say \"\"hi\"\"\",5,6\n");
    const CsvTable table = parse_csv(in);
    REQUIRE(table.header.size() == 3);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0][1] == "two, with comma");
    CHECK(table.rows[1][0] == "say \"hi\"");
}

TEST_CASE("csv ingestion") {
    SUBCASE("known 3x2 file becomes the exact matrix") {
        const std::string path = temp_path("dpdro_exact.csv");
        write_file(path, "f1,f2,target\n1.5,2,0.25\n-3,0.5,1\n0,7,-2\n");
        const GroupedDataset ds = ingest_csv(path, "target", std::nullopt, false);
        REQUIRE(ds.group_count() == 1);
        const auto& g = ds.groups[0];
        CHECK(g.n() == 3);
        CHECK(g.dim() == 2);
        CHECK(g.X(0, 0) == 1.5);
        CHECK(g.X(1, 0) == -3.0);
        CHECK(g.X(2, 1) == 7.0);
        CHECK(g.y[0] == 0.25);
        CHECK(g.y[2] == -2.0);
        CHECK(g.task == TaskKind::Regression);
    }

    SUBCASE("standardization yields zero means and unit sample variances") {
        const std::string path = temp_path("dpdro_std.csv");
        write_file(path, "f1,f2,y\n1,10,5\n2,20,7\n3,35,9\n4,41,13\n");
        const GroupedDataset ds = ingest_csv(path, "y", std::nullopt, true);
        const auto& g = ds.groups[0];
        for (Eigen::Index j = 0; j < g.dim(); ++j) {
            CHECK(std::abs(g.X.col(j).mean()) < 1e-10);
            const double var =
                (g.X.col(j).array() - g.X.col(j).mean()).square().sum() / (g.n() - 1.0);
            CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-10);
        }
        CHECK(std::abs(g.y.mean()) < 1e-10);
    }

    SUBCASE("group column partitions rows in first-appearance order") {
        const std::string path = temp_path("dpdro_groups.csv");
        write_file(path, "f1,kind,y\n1,red,1\n2,white,2\n3,red,3\n4,white,4\n5,white,5\n");
        const GroupedDataset ds = ingest_csv(path, "y", std::string("kind"), false);
        REQUIRE(ds.group_count() == 2);
        CHECK(ds.groups[0].n() == 2); // red
        CHECK(ds.groups[1].n() == 3); // white
        CHECK(ds.groups[0].X(1, 0) == 3.0);
    }

    SUBCASE("0/1 responses become -1/+1 labels") {
        const std::string path = temp_path("dpdro_binary.csv");
        write_file(path, "f1,y\n1,0\n2,1\n3,1\n");
        const GroupedDataset ds = ingest_csv(path, "y", std::nullopt, false);
        CHECK(ds.groups[0].task == TaskKind::BinaryLabel);
        CHECK(ds.groups[0].y[0] == -1.0);
        CHECK(ds.groups[0].y[1] == 1.0);
    }

    SUBCASE("non-numeric cell reports row and column") {
        const std::string path = temp_path("dpdro_bad.csv");
        write_file(path, "f1,y\n1,2\nnope,3\n");
        CHECK_THROWS_WITH_AS(ingest_csv(path, "y", std::nullopt, false),
                             doctest::Contains("row 2"), ParseError);
    }

    SUBCASE("missing columns and missing files are distinct errors") {
        const std::string path = temp_path("dpdro_missing.csv");
        write_file(path, "f1,y\n1,2\n");
        CHECK_THROWS_AS(ingest_csv(path, "nope", std::nullopt, false), ParseError);
        CHECK_THROWS_AS(ingest_csv(path, "y", std::string("nope"), false), ParseError);
        CHECK_THROWS_AS(
            ingest_csv(temp_path("dpdro_does_not_exist.csv"), "y", std::nullopt, false),
            IoError);
    }
}

TEST_CASE("standardizer fits on train only and applies elsewhere") {
    Dataset train;
    train.X.resize(4, 1);
    train.X << 0, 2, 4, 6;
    train.y.resize(4);
    train.y << 0, 1, 2, 3;
    Standardizer st;
    st.fit(train);
    Dataset other = train;
    other.X.array() += 100.0; // shifted split keeps the train statistics
    st.apply(other);
    CHECK(other.X(0, 0) == doctest::Approx((100.0 - 3.0) / std::sqrt(20.0 / 3.0)));
}

TEST_CASE("kfold splitting") {
    Dataset ds;
    ds.X.resize(300, 2);
    ds.y.resize(300);
    for (int i = 0; i < 300; ++i) {
        ds.X(i, 0) = i;
        ds.X(i, 1) = -i;
        ds.y[i] = i;
    }

    SUBCASE("15 folds of 300 rows have size 20 and partition the data") {
        Rng rng(100, 0);
        const auto splits = kfold_split(ds, 15, rng);
        REQUIRE(splits.size() == 15);
        std::set<double> seen;
        for (const auto& split : splits) {
            CHECK(split.validation.n() == 20);
            CHECK(split.train.n() == 280);
            std::set<double> trainSet;
            for (Eigen::Index i = 0; i < split.train.n(); ++i) trainSet.insert(split.train.y[i]);
            for (Eigen::Index i = 0; i < split.validation.n(); ++i) {
                CHECK(seen.insert(split.validation.y[i]).second); // disjoint across folds
                CHECK(trainSet.count(split.validation.y[i]) == 0); // and from its train part
            }
        }
        CHECK(seen.size() == 300); // union covers everything
    }

    SUBCASE("same seed, same split") {
        Rng a(101, 3), b(101, 3);
        const auto s1 = kfold_split(ds, 7, a);
        const auto s2 = kfold_split(ds, 7, b);
        for (std::size_t f = 0; f < s1.size(); ++f)
            CHECK(s1[f].validation.y == s2[f].validation.y);
    }

    SUBCASE("k > n and k < 2 are rejected") {
        Dataset tiny = ds.slice(0, 3);
        Rng rng(102, 0);
        CHECK_THROWS_AS(kfold_split(tiny, 4, rng), std::invalid_argument);
        CHECK_THROWS_AS(kfold_split(ds, 1, rng), std::invalid_argument);
    }
}

TEST_CASE("spec files parse key-value lines with comments and lists") {
    const SpecFile spec = SpecFile::parse("a = 1\n# comment\nlist = 1, 2.5, 3\nname = hi\n"
                                          "flag = true\nbeta = inf\n");
    CHECK(spec.get_int("a") == 1);
    CHECK(spec.get_doubles("list") == std::vector<double>{1.0, 2.5, 3.0});
    CHECK(spec.get_string("name") == "hi");
    CHECK(spec.get_bool("flag", false));
    CHECK(std::isinf(spec.get_double("beta")));
    CHECK(spec.get_int("absent", 9) == 9);
    CHECK_THROWS_AS(spec.get_string("absent"), ParseError);
    CHECK_THROWS_AS(SpecFile::parse("not a pair\n"), ParseError);
    CHECK(spec.digest() ==
          SpecFile::parse("a=1\nlist=1, 2.5, 3\nname=hi\nflag=true\nbeta=inf").digest());
}

TEST_CASE("experiment spec round-trips through the key-value form") {
    const SpecFile file = SpecFile::parse(
        "task = linreg\nsource = sparse_linear\nn = 50\nd = 8\nmethods = dp, ols\n"
        "alpha_grid = 0.05\nM = 20\nT = 10\npasses = 3\nreplications = 2\ntest_size = 100\n"
        "loss_scale = 0.001\nbeta = 1\n");
    const ExperimentSpec spec = ExperimentSpec::from_spec_file(file);
    CHECK(spec.methods.size() == 2);
    CHECK(spec.methods[0].kind == MethodKind::DpRobust);
    CHECK(spec.methods[1].kind == MethodKind::Ols);
    CHECK(spec.mc.M == 20);
    const std::uint64_t d1 = spec.to_spec_file().digest();
    CHECK(d1 == spec.to_spec_file().digest());
}

TEST_CASE("classification tasks require label-valued sources") {
    const SpecFile file = SpecFile::parse(
        "task = logreg\nsource = sparse_linear\nmethods = erm\nreplications = 1\n");
    CHECK_THROWS_AS(ExperimentSpec::from_spec_file(file), ParseError);
}

TEST_CASE("cross-validation selects the argmin with tie-breaking") {
    // Ridge on a noiseless sparse linear instance: tiny alpha wins.
    ExperimentSpec spec;
    SyntheticSource syn;
    syn.kind = SyntheticSource::Kind::SparseLinear;
    syn.n = 60;
    syn.d = 6;
    syn.sigma = 0.0;
    spec.source = syn;
    spec.task = TaskType::LinReg;
    spec.methods = {method("ridge", MethodKind::RidgeClosedForm,
                           std::numeric_limits<double>::infinity())};
    spec.alphaGrid = {1e-4, 1.0, 100.0};
    spec.foldCount = 4;
    spec.replications = 1;

    Rng rng(103, 0);
    GroupedDataset data;
    data.groups.push_back(gen_sparse_linear(60, 6, 0.3, 0.0, sparse_ones_coeff(6, 3), rng));

    const CvResult cv = cross_validate(spec, data, RngHandle{9, 0});
    REQUIRE(cv.table.size() == 3);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& point : cv.table) best = std::min(best, point.meanValidationRisk);
    CHECK(cv.chosen.alpha == 1e-4);
    for (const auto& point : cv.table)
        if (point.params.alpha == cv.chosen.alpha)
            CHECK(point.meanValidationRisk == best);

    SUBCASE("single-point grid returns that point without search") {
        spec.alphaGrid = {42.0};
        const CvResult single = cross_validate(spec, data, RngHandle{9, 1});
        CHECK(single.chosen.alpha == 42.0);
        CHECK(single.table.size() == 1);
    }
}

TEST_CASE("run_experiment on noiseless data drives ERM test risk to zero") {
    ExperimentSpec spec;
    SyntheticSource syn;
    syn.kind = SyntheticSource::Kind::SparseLinear;
    syn.n = 50;
    syn.d = 8;
    syn.active = 5;
    syn.sigma = 0.0;
    spec.source = syn;
    spec.task = TaskType::LinReg;
    spec.methods = {method("erm", MethodKind::Erm)};
    spec.replications = 1;
    spec.testSize = 200;

    const ExperimentResult result = run_experiment(spec, 7, 1);
    REQUIRE(result.rows.size() == 1);
    CHECK(result.rows[0].testRisk < 1e-6);
    CHECK(result.replicateErrors.empty());
}

TEST_CASE("run_experiment is deterministic across thread counts") {
    ExperimentSpec spec;
    SyntheticSource syn;
    syn.kind = SyntheticSource::Kind::SparseLinear;
    syn.n = 30;
    syn.d = 5;
    syn.sigma = 0.5;
    spec.source = syn;
    spec.task = TaskType::LinReg;
    spec.methods = {method("dp", MethodKind::DpRobust), method("ols", MethodKind::Ols)};
    spec.alphaGrid = {0.5};
    spec.mc.T = 10;
    spec.mc.M = 8;
    spec.sgd.passes = 4;
    spec.lossScale = 0.01;
    spec.replications = 6;
    spec.testSize = 100;

    const ExperimentResult a = run_experiment(spec, 11, 1);
    const ExperimentResult b = run_experiment(spec, 11, 2);
    const std::string bytesA = render_rows_csv(a.rows);
    const std::string bytesB = render_rows_csv(b.rows);
    CHECK(bytesA == bytesB);
    // And a different seed changes them.
    const ExperimentResult c = run_experiment(spec, 12, 1);
    CHECK(render_rows_csv(c.rows) != bytesA);
}

TEST_CASE("reports round-trip and summaries recompute from emitted rows") {
    std::vector<MetricsRow> rows;
    for (int r = 0; r < 4; ++r) {
        MetricsRow row;
        row.replicate = r;
        row.method = r % 2 == 0 ? "dp" : "ols";
        row.testRisk = 0.1 * (r + 1) + 1e-17; // exercise full precision
        row.rmse = 1.0 / (r + 3.0);
        if (r != 2) row.distanceToTruth = 2.0 * r;
        row.coeffNorm = std::sqrt(2.0) * (r + 1);
        rows.push_back(row);
    }

    const std::string path = temp_path("dpdro_rows.csv");
    emit_report(rows, ReportFormat::Csv, path);
    const auto loaded = load_rows_csv(path);
    REQUIRE(loaded.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(loaded[i].replicate == rows[i].replicate);
        CHECK(loaded[i].method == rows[i].method);
        CHECK(loaded[i].testRisk == rows[i].testRisk);
        CHECK(loaded[i].rmse == rows[i].rmse);
        CHECK(loaded[i].distanceToTruth == rows[i].distanceToTruth);
        CHECK(loaded[i].coeffNorm == rows[i].coeffNorm);
    }

    // Summary from the emitted rows matches the original to 1e-12.
    const auto fromLoaded = summarize(loaded);
    const auto fromOriginal = summarize(rows);
    for (const auto& [name, s] : fromOriginal) {
        CHECK(std::abs(fromLoaded.at(name).testRisk->mean - s.testRisk->mean) < 1e-12);
        CHECK(std::abs(fromLoaded.at(name).testRisk->std - s.testRisk->std) < 1e-12);
    }

    SUBCASE("csv header order is pinned") {
        std::ifstream in(path);
        std::string header;
        std::getline(in, header);
        CHECK(header == "replicate,method,testRisk,rmse,distanceToTruth,coeffNorm");
    }

    SUBCASE("empty rows are an error") {
        CHECK_THROWS_AS(emit_report({}, ReportFormat::Csv, path), std::invalid_argument);
    }

    SUBCASE("json rendering is deterministic and carries the digest") {
        const std::string j1 = render_report_json(rows, "abc123");
        const std::string j2 = render_report_json(rows, "abc123");
        CHECK(j1 == j2);
        CHECK(j1.find("\"spec_digest\": \"abc123\"") != std::string::npos);
        CHECK(j1.find("\"summary\"") != std::string::npos);
    }
}

TEST_CASE("csv-backed experiment runs the fold protocol end to end") {
    // 48-row grouped regression CSV; folds of the pool train, the rest tests.
    std::ostringstream body;
    body << "x1,x2,grp,y\n";
    Rng rng(104, 0);
    for (int i = 0; i < 48; ++i) {
        const double x1 = rng.normal();
        const double x2 = rng.normal();
        const char* grp = i % 2 == 0 ? "red" : "white";
        const double y = 1.5 * x1 - 0.5 * x2 + 0.1 * rng.normal();
        body << x1 << ',' << x2 << ',' << grp << ',' << y << '\n';
    }
    const std::string path = temp_path("dpdro_exp.csv");
    write_file(path, body.str());

    ExperimentSpec spec;
    CsvSource csv;
    csv.path = path;
    csv.responseColumn = "y";
    csv.groupColumn = "grp";
    csv.standardize = true;
    csv.trainSize = 16;
    spec.source = csv;
    spec.task = TaskType::LinReg;
    spec.methods = {method("erm", MethodKind::Erm)};
    spec.foldCount = 4;

    const ExperimentResult result = run_experiment(spec, 21, 1);
    CHECK(result.replicateErrors.empty());
    CHECK(result.rows.size() == 4); // one per fold
    for (const auto& row : result.rows) CHECK(std::isfinite(row.testRisk));

    SUBCASE("disjoint selection pool halves the fold source") {
        ExperimentSpec disjoint = spec;
        disjoint.disjointSelectionPool = true;
        disjoint.foldCount = 2;
        std::get<CsvSource>(disjoint.source).trainSize = 16;
        const ExperimentResult r2 = run_experiment(disjoint, 22, 1);
        CHECK(r2.replicateErrors.empty());
        CHECK(r2.rows.size() == 2);
    }
}
