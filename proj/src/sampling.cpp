#include "dpdro/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace dpdro {

void DpSpec::validate() const {
    if (!std::isfinite(concentration) || !(concentration > 0.0))
        throw std::invalid_argument("DpSpec: concentration must be finite and > 0");
}

void HdpSpec::validate() const {
    if (!std::isfinite(topConcentration) || !(topConcentration > 0.0))
        throw std::invalid_argument("HdpSpec: topConcentration must be finite and > 0");
    if (groupConcentrations.empty())
        throw std::invalid_argument("HdpSpec: needs at least one group concentration");
    for (double a : groupConcentrations)
        if (!std::isfinite(a) || !(a > 0.0))
            throw std::invalid_argument("HdpSpec: group concentrations must be finite and > 0");
}

DpSpec dp_posterior(const DpSpec& prior, std::shared_ptr<const Dataset> data) {
    prior.validate();
    const auto n = static_cast<double>(data ? data->n() : 0);
    if (n == 0.0) return prior;
    const double alpha = prior.concentration;
    DpSpec post;
    post.concentration = alpha + n;
    post.centering = Centering::mixture({{n / (alpha + n), Centering::empirical(std::move(data))},
                                         {alpha / (alpha + n), prior.centering}});
    return post;
}

namespace {

void place_atom(DiscreteMeasure& m, Eigen::Index j, const Centering::Draw& d) {
    m.atomY[j] = d.y;
    m.atomX.row(j) = d.x;
    m.origin[static_cast<std::size_t>(j)] = d.origin;
}

} // namespace

DiscreteMeasure stick_breaking(const DpSpec& spec, int truncation, Rng& rng) {
    spec.validate();
    if (truncation < 1) throw std::invalid_argument("stick_breaking: truncation must be >= 1");

    const Eigen::Index t = truncation;
    DiscreteMeasure m;
    m.atomX.resize(t + 1, spec.centering.feature_dim());
    m.atomY.resize(t + 1);
    m.weights.resize(t + 1);
    m.origin.resize(static_cast<std::size_t>(t) + 1);

    double stick = 1.0; // prod_{k<j} (1 - B_k)
    for (Eigen::Index j = 0; j < t; ++j) {
        place_atom(m, j, spec.centering.sample(rng));
        const double b = rng.beta_one(spec.concentration);
        m.weights[j] = b * stick;
        stick *= 1.0 - b;
    }
    place_atom(m, t, spec.centering.sample(rng));
    m.weights[t] = stick; // remainder mass
    return m;
}

DiscreteMeasure multinomial_dirichlet(const DpSpec& spec, int truncation, Rng& rng,
                                      int* redrawCount) {
    spec.validate();
    if (truncation < 1)
        throw std::invalid_argument("multinomial_dirichlet: truncation must be >= 1");

    const Eigen::Index t = truncation;
    const double shape = spec.concentration / static_cast<double>(truncation);
    DiscreteMeasure m;
    m.atomX.resize(t, spec.centering.feature_dim());
    m.atomY.resize(t);
    m.weights.resize(t);
    m.origin.resize(static_cast<std::size_t>(t));

    if (redrawCount) *redrawCount = 0;
    for (;;) {
        double total = 0.0;
        for (Eigen::Index j = 0; j < t; ++j) {
            place_atom(m, j, spec.centering.sample(rng));
            const double g = rng.gamma(shape);
            m.weights[j] = g;
            total += g;
        }
        if (total > 0.0) {
            m.weights /= total;
            return m;
        }
        if (redrawCount) ++*redrawCount;
    }
}

DiscreteMeasure dp_approx_draw(const DpSpec& spec, int truncation, DpApprox how, Rng& rng) {
    return how == DpApprox::SB ? stick_breaking(spec, truncation, rng)
                               : multinomial_dirichlet(spec, truncation, rng);
}

DpSpec hdp_top_posterior(const HdpSpec& spec, std::shared_ptr<const Dataset> pooled) {
    spec.validate();
    DpSpec top;
    top.concentration = spec.topConcentration;
    top.centering = spec.topCentering;
    return dp_posterior(top, std::move(pooled));
}

DpSpec hdp_group_posterior(const HdpSpec& spec, std::shared_ptr<const Dataset> group, int s,
                           std::shared_ptr<const DiscreteMeasure> top) {
    spec.validate();
    if (s < 0 || s >= spec.group_count())
        throw std::invalid_argument("hdp_group_posterior: group index out of range");
    DpSpec prior;
    prior.concentration = spec.groupConcentrations[static_cast<std::size_t>(s)];
    prior.centering = Centering::measure_atoms(std::move(top));
    return dp_posterior(prior, std::move(group));
}

DiscreteMeasure hdp_group_draw(const HdpSpec& spec, std::shared_ptr<const Dataset> pooled,
                               std::shared_ptr<const Dataset> group, int s, int t0, int ts,
                               DpApprox how, Rng& rng) {
    auto top = std::make_shared<DiscreteMeasure>(
        dp_approx_draw(hdp_top_posterior(spec, std::move(pooled)), t0, how, rng));
    return dp_approx_draw(hdp_group_posterior(spec, std::move(group), s, std::move(top)), ts, how,
                          rng);
}

DiscreteMeasure hdp_group_draw(const HdpSpec& spec, const GroupedDataset& data, int s, int t0,
                               int ts, DpApprox how, Rng& rng) {
    data.validate();
    if (s < 0 || s >= data.group_count())
        throw std::invalid_argument("hdp_group_draw: group index out of range");
    auto pooled = std::make_shared<Dataset>(data.pooled());
    auto group = std::make_shared<Dataset>(data.groups[static_cast<std::size_t>(s)]);
    return hdp_group_draw(spec, std::move(pooled), std::move(group), s, t0, ts, how, rng);
}

} // namespace dpdro
