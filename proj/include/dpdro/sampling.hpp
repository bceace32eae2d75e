#pragma once

#include <memory>
#include <vector>

#include "dpdro/centering.hpp"
#include "dpdro/dataset.hpp"
#include "dpdro/measure.hpp"
#include "dpdro/rng.hpp"

namespace dpdro {

/// Parameters of a Dirichlet process: concentration > 0 and a centering
/// measure. Posterior updates stay in this family.
struct DpSpec {
    double concentration = 1.0;
    Centering centering;

    void validate() const;
};

/// Hierarchical DP: group-level DP(alpha_s, p0) sharing a top-level
/// p0 ~ DP(alpha0, H) with continuous centering H.
struct HdpSpec {
    double topConcentration = 1.0;
    std::vector<double> groupConcentrations;
    Centering topCentering;

    int group_count() const { return static_cast<int>(groupConcentrations.size()); }
    void validate() const;
};

enum class DpApprox { SB, MD };

/// Conjugate update: DP(alpha, p0) given n observations becomes
/// DP(alpha + n, n/(alpha+n) p_emp + alpha/(alpha+n) p0). n = 0 returns the
/// prior unchanged.
DpSpec dp_posterior(const DpSpec& prior, std::shared_ptr<const Dataset> data);

/// Truncated stick-breaking draw: T stick atoms with weights
/// B_j prod_{k<j}(1 - B_k), B_j ~ Beta(1, alpha), plus one remainder atom of
/// mass prod_{k<=T}(1 - B_k) appended last. T + 1 atoms total.
DiscreteMeasure stick_breaking(const DpSpec& spec, int truncation, Rng& rng);

/// Multinomial-Dirichlet draw: T atoms with Dirichlet(alpha/T, ..., alpha/T)
/// weights obtained by normalizing Gamma(alpha/T, 1) variates. If every
/// variate underflows to zero the whole vector is redrawn; redrawCount
/// reports how many times that happened.
DiscreteMeasure multinomial_dirichlet(const DpSpec& spec, int truncation, Rng& rng,
                                      int* redrawCount = nullptr);

DiscreteMeasure dp_approx_draw(const DpSpec& spec, int truncation, DpApprox how, Rng& rng);

/// Posterior of the shared base measure given all groups pooled:
/// DP(alpha0 + N, N/(alpha0+N) pooled-empirical + alpha0/(alpha0+N) H).
DpSpec hdp_top_posterior(const HdpSpec& spec, std::shared_ptr<const Dataset> pooled);

/// Posterior of group s given a realized top draw p0:
/// DP(alpha_s + N_s, N_s/(alpha_s+N_s) group-empirical + alpha_s/(alpha_s+N_s) p0).
DpSpec hdp_group_posterior(const HdpSpec& spec, std::shared_ptr<const Dataset> group, int s,
                           std::shared_ptr<const DiscreteMeasure> top);

/// Two-stage draw from the marginal posterior of group s: first the shared
/// base measure at truncation t0, then the group measure at truncation ts.
/// Assumes diffuse group laws (no duplicate rows across groups); callers that
/// ingest real data should check has_duplicate_rows() up front.
DiscreteMeasure hdp_group_draw(const HdpSpec& spec, std::shared_ptr<const Dataset> pooled,
                               std::shared_ptr<const Dataset> group, int s, int t0, int ts,
                               DpApprox how, Rng& rng);

/// Convenience overload that pools the groups on every call.
DiscreteMeasure hdp_group_draw(const HdpSpec& spec, const GroupedDataset& data, int s, int t0,
                               int ts, DpApprox how, Rng& rng);

} // namespace dpdro
