#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "dpdro/datagen.hpp"
#include "dpdro/losses.hpp"
#include "dpdro/sampling.hpp"
#include "support.hpp"

using namespace dpdro;
using testsupport::RunningStat;

namespace {

std::shared_ptr<Dataset> toy_dataset(int n, int d, std::uint64_t seed) {
    Rng rng(seed, 0);
    auto ds = std::make_shared<Dataset>();
    ds->X.resize(n, d);
    ds->y.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) ds->X(i, j) = rng.normal();
        ds->y[i] = rng.normal();
    }
    return ds;
}

double measure_linear_functional(const DiscreteMeasure& m, const LossFn& loss,
                                 const Eigen::VectorXd& theta) {
    const Eigen::VectorXd z = m.atomX * theta;
    double out = 0.0;
    for (Eigen::Index j = 0; j < m.size(); ++j) out += m.weights[j] * loss.value(z[j], m.atomY[j]);
    return out;
}

double hand_empirical_risk(const Dataset& ds, const LossFn& loss, const Eigen::VectorXd& theta) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < ds.n(); ++i)
        total += loss.value(ds.X.row(i).dot(theta), ds.y[i]);
    return total / static_cast<double>(ds.n());
}

// Raw moment E[X^k] of Beta(a, b).
double beta_raw_moment(double a, double b, int k) {
    double m = 1.0;
    for (int i = 0; i < k; ++i) m *= (a + i) / (a + b + i);
    return m;
}

} // namespace

TEST_CASE("dp_posterior updates concentration and centering weights") {
    DpSpec prior;
    prior.concentration = 2.0;
    prior.centering = Centering::standard_normal(3);

    SUBCASE("empty sample leaves the prior unchanged") {
        const DpSpec post = dp_posterior(prior, nullptr);
        CHECK(post.concentration == 2.0);
        const DpSpec post2 = dp_posterior(prior, std::make_shared<Dataset>());
        CHECK(post2.concentration == 2.0);
    }

    SUBCASE("posterior concentration is alpha + n and the empirical weight n/(alpha+n)") {
        auto data = toy_dataset(8, 2, 7);
        const DpSpec post = dp_posterior(prior, data);
        CHECK(post.concentration == doctest::Approx(10.0));
        Rng rng(1, 1);
        long train = 0;
        const int draws = 100000;
        for (int i = 0; i < draws; ++i)
            if (post.centering.sample(rng).origin == AtomOrigin::TrainData) ++train;
        const double want = 8.0 / 10.0;
        const double se = std::sqrt(want * (1 - want) / draws);
        CHECK(std::abs(static_cast<double>(train) / draws - want) < 4 * se);
    }

    SUBCASE("alpha -> 0 recovers the empirical distribution") {
        prior.concentration = 1e-12;
        auto data = toy_dataset(10, 2, 8);
        const DpSpec post = dp_posterior(prior, data);
        Rng rng(2, 2);
        for (int i = 0; i < 10000; ++i)
            CHECK(post.centering.sample(rng).origin == AtomOrigin::TrainData);
    }
}

TEST_CASE("stick breaking basics") {
    DpSpec spec;
    spec.concentration = 3.0;
    spec.centering = Centering::standard_normal(2);

    SUBCASE("T = 1 yields two atoms summing to one") {
        Rng rng(3, 0);
        const DiscreteMeasure m = stick_breaking(spec, 1, rng);
        CHECK(m.size() == 2);
        CHECK(std::abs(m.weights.sum() - 1.0) < 1e-12);
    }

    SUBCASE("construction invariants at several truncations") {
        for (int t : {1, 4, 37}) {
            Rng rng(4, static_cast<std::uint64_t>(t));
            const DiscreteMeasure m = stick_breaking(spec, t, rng);
            CHECK(m.size() == t + 1);
            CHECK_NOTHROW(m.validate());
        }
    }

    SUBCASE("T = 0 is rejected") {
        Rng rng(5, 0);
        CHECK_THROWS_AS(stick_breaking(spec, 0, rng), std::invalid_argument);
    }
}

TEST_CASE("stick-breaking remainder mass matches (a/(a+1))^T") {
    // The remainder atom is appended last; its mean is the product of
    // Beta(1, a) tail expectations.
    const double a = 4.0;
    const int t = 6;
    DpSpec spec;
    spec.concentration = a;
    spec.centering = Centering::standard_normal(2);
    Rng rng(6, 0);
    RunningStat stat;
    for (int i = 0; i < 100000; ++i) {
        const DiscreteMeasure m = stick_breaking(spec, t, rng);
        stat.add(m.weights[m.size() - 1]);
    }
    const double expected = std::pow(a / (a + 1.0), t);
    CHECK(std::abs(stat.mean() - expected) < 4 * stat.std_error());
}

TEST_CASE("stick-breaking remainder mass decays monotonically in T") {
    DpSpec spec;
    spec.concentration = 5.0;
    spec.centering = Centering::standard_normal(2);
    double previous = 1.0;
    for (int t : {1, 2, 4, 8, 16}) {
        Rng rng(7, static_cast<std::uint64_t>(t));
        RunningStat stat;
        for (int i = 0; i < 10000; ++i) {
            const DiscreteMeasure m = stick_breaking(spec, t, rng);
            stat.add(m.weights[m.size() - 1]);
        }
        CHECK(stat.mean() < previous);
        previous = stat.mean();
    }
}

TEST_CASE("multinomial-dirichlet basics") {
    DpSpec spec;
    spec.concentration = 6.0;
    spec.centering = Centering::standard_normal(2);

    SUBCASE("T = 1 gives a single atom of weight one") {
        Rng rng(8, 0);
        const DiscreteMeasure m = multinomial_dirichlet(spec, 1, rng);
        CHECK(m.size() == 1);
        CHECK(m.weights[0] == doctest::Approx(1.0));
    }

    SUBCASE("invariants and rejection of T = 0") {
        Rng rng(9, 0);
        const DiscreteMeasure m = multinomial_dirichlet(spec, 12, rng);
        CHECK(m.size() == 12);
        CHECK_NOTHROW(m.validate());
        CHECK_THROWS_AS(multinomial_dirichlet(spec, 0, rng), std::invalid_argument);
    }
}

TEST_CASE("multinomial-dirichlet weight moments match the Dirichlet(alpha/T) oracle") {
    const double alpha = 5.0;
    const int t = 4;
    DpSpec spec;
    spec.concentration = alpha;
    spec.centering = Centering::standard_normal(2);

    Rng rng(10, 0);
    const int draws = 100000;
    RunningStat stat;
    for (int i = 0; i < draws; ++i) {
        const DiscreteMeasure m = multinomial_dirichlet(spec, t, rng);
        stat.add(m.weights[0]);
    }

    // p_j ~ Beta(alpha/T, alpha - alpha/T): mean 1/T.
    const double meanWant = 1.0 / t;
    CHECK(std::abs(stat.mean() - meanWant) < 4 * stat.std_error());

    // Var(p_j) = (1/T)(1 - 1/T)/(alpha + 1); compare against the sampling
    // error of the variance estimator computed from Beta moments.
    const double varWant = meanWant * (1.0 - meanWant) / (alpha + 1.0);
    const double a = alpha / t;
    const double b = alpha - a;
    const double m1 = beta_raw_moment(a, b, 1);
    const double m2 = beta_raw_moment(a, b, 2);
    const double m3 = beta_raw_moment(a, b, 3);
    const double m4 = beta_raw_moment(a, b, 4);
    const double mu2 = m2 - m1 * m1;
    const double mu4 = m4 - 4 * m3 * m1 + 6 * m2 * m1 * m1 - 3 * m1 * m1 * m1 * m1;
    const double seVar = std::sqrt((mu4 - mu2 * mu2 * (draws - 3.0) / (draws - 1.0)) / draws);
    CHECK(std::abs(stat.variance() - varWant) < 4 * seVar);
}

TEST_CASE("multinomial-dirichlet redraws when every gamma underflows") {
    DpSpec spec;
    spec.concentration = 1e-6; // shape 5e-7 underflows with overwhelming probability
    spec.centering = Centering::standard_normal(2);
    Rng rng(11, 0);
    int redraws = 0;
    const DiscreteMeasure m = multinomial_dirichlet(spec, 2, rng, &redraws);
    CHECK(redraws >= 1);
    CHECK_NOTHROW(m.validate());
}

TEST_CASE("equal handles reproduce identical measures") {
    DpSpec spec;
    spec.concentration = 4.0;
    spec.centering = Centering::mixture({{0.5, Centering::empirical(toy_dataset(6, 3, 12))},
                                         {0.5, Centering::standard_normal(4)}});
    for (DpApprox how : {DpApprox::SB, DpApprox::MD}) {
        Rng r1(21, 9), r2(21, 9);
        const DiscreteMeasure a = dp_approx_draw(spec, 17, how, r1);
        const DiscreteMeasure b = dp_approx_draw(spec, 17, how, r2);
        CHECK(a.weights == b.weights);
        CHECK(a.atomY == b.atomY);
        CHECK(a.atomX == b.atomX);
        CHECK(a.origin == b.origin);
    }
}

TEST_CASE("origin flags follow the resolved mixture component") {
    auto data = toy_dataset(5, 2, 13);
    DpSpec spec;
    spec.concentration = 2.0;
    spec.centering = Centering::mixture(
        {{0.3, Centering::empirical(data)}, {0.7, Centering::standard_normal(3)}});
    Rng rng(14, 0);
    long train = 0, total = 0;
    for (int i = 0; i < 2000; ++i) {
        const DiscreteMeasure m = multinomial_dirichlet(spec, 10, rng);
        for (auto o : m.origin) {
            if (o == AtomOrigin::TrainData) ++train;
            ++total;
        }
    }
    const double frac = static_cast<double>(train) / static_cast<double>(total);
    const double se = std::sqrt(0.3 * 0.7 / static_cast<double>(total));
    CHECK(std::abs(frac - 0.3) < 4 * se);
}

TEST_CASE("SB and MD estimate the same posterior-predictive linear functional") {
    auto data = toy_dataset(12, 2, 15);
    DpSpec prior;
    prior.concentration = 3.0;
    prior.centering = Centering::standard_normal(3);
    const DpSpec post = dp_posterior(prior, data);

    LossFn loss;
    loss.kind = LossKind::Squared;
    Eigen::VectorXd theta(2);
    theta << 0.4, -0.7;

    const int draws = 20000;
    RunningStat sb, md;
    Rng rngSb(16, 0), rngMd(16, 1);
    for (int i = 0; i < draws; ++i) {
        sb.add(measure_linear_functional(stick_breaking(post, 100, rngSb), loss, theta));
        md.add(measure_linear_functional(multinomial_dirichlet(post, 100, rngMd), loss, theta));
    }
    const double joint =
        std::sqrt(sb.std_error() * sb.std_error() + md.std_error() * md.std_error());
    CHECK(std::abs(sb.mean() - md.mean()) < 4 * joint);
}

TEST_CASE("hdp posterior stages carry the right concentrations") {
    HdpSpec spec;
    spec.topConcentration = 4.0;
    spec.groupConcentrations = {2.0, 3.0};
    spec.topCentering = Centering::standard_normal(3);

    GroupedDataset data;
    data.groups.push_back(*toy_dataset(15, 2, 17));
    data.groups.push_back(*toy_dataset(10, 2, 18));

    auto pooled = std::make_shared<Dataset>(data.pooled());
    const DpSpec top = hdp_top_posterior(spec, pooled);
    CHECK(top.concentration == doctest::Approx(4.0 + 25.0));

    Rng rng(19, 0);
    auto topDraw = std::make_shared<DiscreteMeasure>(multinomial_dirichlet(top, 50, rng));
    auto group = std::make_shared<Dataset>(data.groups[1]);
    const DpSpec stage2 = hdp_group_posterior(spec, group, 1, topDraw);
    CHECK(stage2.concentration == doctest::Approx(3.0 + 10.0));
}

TEST_CASE("hdp_group_draw shapes, weights, and origin flags") {
    HdpSpec spec;
    spec.topConcentration = 4.0;
    spec.groupConcentrations = {2.0, 3.0};
    spec.topCentering = Centering::standard_normal(3);

    GroupedDataset data;
    data.groups.push_back(*toy_dataset(15, 2, 20));
    data.groups.push_back(*toy_dataset(10, 2, 21));

    Rng rng(22, 0);
    const DiscreteMeasure md = hdp_group_draw(spec, data, 0, 40, 25, DpApprox::MD, rng);
    CHECK(md.size() == 25);
    CHECK_NOTHROW(md.validate());

    const DiscreteMeasure sb = hdp_group_draw(spec, data, 0, 40, 25, DpApprox::SB, rng);
    CHECK(sb.size() == 26);
    CHECK_NOTHROW(sb.validate());
}

TEST_CASE("hdp MC mean matches the closed-form posterior-expected risk") {
    // Hand-computed oracle; identity transform, squared loss, scale 1.
    const double alpha0 = 4.0;
    const double alphaS = 3.0;
    HdpSpec spec;
    spec.topConcentration = alpha0;
    spec.groupConcentrations = {alphaS, alphaS};
    spec.topCentering = Centering::standard_normal(3);

    GroupedDataset data;
    data.groups.push_back(*toy_dataset(15, 2, 23));
    data.groups.push_back(*toy_dataset(15, 2, 24));
    const Dataset pooled = data.pooled();

    LossFn loss;
    loss.kind = LossKind::Squared;
    Eigen::VectorXd theta(2);
    theta << 0.8, -0.3;

    const int s = 0;
    const double ns = 15.0, n = 30.0;
    const double within = hand_empirical_risk(data.groups[0], loss, theta);
    const double pooledRisk = hand_empirical_risk(pooled, loss, theta);
    const double priorRisk = 1.0 + theta.squaredNorm();
    const double oracle =
        ns / (alphaS + ns) * within +
        alphaS / (alphaS + ns) *
            (n / (alpha0 + n) * pooledRisk + alpha0 / (alpha0 + n) * priorRisk);

    auto pooledPtr = std::make_shared<Dataset>(pooled);
    auto groupPtr = std::make_shared<Dataset>(data.groups[0]);
    RunningStat stat;
    Rng rng(25, 0);
    for (int i = 0; i < 5000; ++i) {
        const DiscreteMeasure m =
            hdp_group_draw(spec, pooledPtr, groupPtr, s, 200, 200, DpApprox::MD, rng);
        stat.add(measure_linear_functional(m, loss, theta));
    }
    CHECK(std::abs(stat.mean() - oracle) / oracle < 0.02);
}

TEST_CASE("hdp with one group and huge alpha0 reduces to the single-source DP") {
    HdpSpec spec;
    spec.topConcentration = 1e9;
    spec.groupConcentrations = {3.0};
    spec.topCentering = Centering::standard_normal(3);

    GroupedDataset data;
    data.groups.push_back(*toy_dataset(15, 2, 26));

    LossFn loss;
    loss.kind = LossKind::Squared;
    Eigen::VectorXd theta(2);
    theta << -0.5, 0.6;

    // Single-source ambiguity-neutral value, computed by hand.
    const double n = 15.0, alpha = 3.0;
    const double oracle = n / (alpha + n) * hand_empirical_risk(data.groups[0], loss, theta) +
                          alpha / (alpha + n) * (1.0 + theta.squaredNorm());

    auto pooledPtr = std::make_shared<Dataset>(data.pooled());
    auto groupPtr = std::make_shared<Dataset>(data.groups[0]);
    RunningStat stat;
    Rng rng(27, 0);
    for (int i = 0; i < 5000; ++i) {
        const DiscreteMeasure m =
            hdp_group_draw(spec, pooledPtr, groupPtr, 0, 200, 200, DpApprox::MD, rng);
        stat.add(measure_linear_functional(m, loss, theta));
    }
    CHECK(std::abs(stat.mean() - oracle) / oracle < 0.02);
}

TEST_CASE("duplicate rows across groups are detected") {
    GroupedDataset data;
    data.groups.push_back(*toy_dataset(6, 2, 28));
    data.groups.push_back(*toy_dataset(6, 2, 29));
    CHECK(!has_duplicate_rows(data));
    data.groups[1].X.row(3) = data.groups[0].X.row(2);
    data.groups[1].y[3] = data.groups[0].y[2];
    CHECK(has_duplicate_rows(data));
}

TEST_CASE("invalid specs are rejected") {
    DpSpec dp;
    dp.concentration = 0.0;
    Rng rng(30, 0);
    CHECK_THROWS_AS(stick_breaking(dp, 3, rng), std::invalid_argument);
    HdpSpec hdp;
    hdp.topConcentration = 1.0;
    hdp.groupConcentrations = {};
    CHECK_THROWS_AS(hdp.validate(), std::invalid_argument);
}
