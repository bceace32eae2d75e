#pragma once

#include <cstdint>
#include <random>

namespace dpdro {

/// Addresses one reproducible random substream: equal (seed, stream) pairs
/// yield bit-identical draw sequences on a given build.
struct RngHandle {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    /// Handle shifted by k substreams (replicate/measure fan-out).
    RngHandle at(std::uint64_t k) const { return {seed, stream + k}; }
};

/// Deterministic generator over a substream. All distributions are sampled
/// with explicit formulas (no std::*_distribution, whose output is
/// implementation-defined) so streams are stable across compilers.
class Rng {
public:
    explicit Rng(RngHandle handle);
    Rng(std::uint64_t seed, std::uint64_t stream) : Rng(RngHandle{seed, stream}) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform on [0, 1).
    double uniform();
    /// Uniform on (0, 1].
    double uniform_pos();
    /// Standard normal via Box-Muller.
    double normal();
    /// Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 boosted through
    /// Gamma(shape + 1) * U^{1/shape} (may underflow to 0 for tiny shapes).
    double gamma(double shape);
    /// Beta(1, alpha) as 1 - U^{1/alpha} (inverse CDF).
    double beta_one(double alpha);
    /// Unbiased integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 gen_;
};

} // namespace dpdro
