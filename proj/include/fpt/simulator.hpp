#pragma once

// Euler-Maruyama Monte Carlo generation of first passage times through the
// curved threshold, with a Brownian-bridge crossing test at every step so
// excursions between grid points are not missed. Streams are counter-based:
// path i is a pure function of (seed, i), so samples are reproducible across
// runs and across any degree of parallelism.

#include "fpt/fpt_law.hpp"
#include "fpt/thresholds.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace fpt {

struct SimConfig {
    double dt = 1e-3;
    std::int64_t n_paths = 1;
    std::uint64_t seed = 0;
    double t_max = 0.0;  // values <= t0 mean automatic: t0 + 1e6 * dt
};

struct FptSample {
    std::vector<double> times;                    // uncensored passage times, stream order
    std::vector<std::int64_t> censored_streams;   // streams that hit t_max, ascending
    SimConfig config;

    std::int64_t censored_count() const { return static_cast<std::int64_t>(censored_streams.size()); }
};

/// Probability that a Brownian bridge between consecutive grid values crosses
/// the level b_next in between, assembled from the published quadratic form
/// exp(-2[b^2 - b(x_i + x_next) + x_i*x_next] / (sigma2*dt)) and clamped to 1.
double bridge_crossing_prob(double sigma2, double dt, double b_next, double x_i, double x_next);

/// One path. Per step the stream yields one standard normal increment (via
/// the inverse cdf) followed by one uniform for the bridge test, in that
/// order. Returns the grid time on a direct hit, the step midpoint on a
/// bridge-detected crossing, and nullopt when t_max is reached first.
std::optional<double> simulate_fpt(const WienerParams& w, const CurvedThreshold& th,
                                   const SimConfig& cfg, std::uint64_t stream_index);

/// n_paths streams with indices 0..n-1, assembled in stream order no matter
/// how many worker threads run (n_threads = 0 picks the hardware count).
FptSample simulate_sample(const WienerParams& w, const CurvedThreshold& th, const SimConfig& cfg,
                          int n_threads = 0);

struct EmpiricalCdf {
    std::vector<double> sorted_times;
    double operator()(double t) const;
};

struct EmpiricalStats {
    FptMoments moments;  // unbiased variance; total_mass is the uncensored fraction
    EmpiricalCdf cdf;
};

/// Sample mean/variance/CV and the step-function empirical cdf.
/// Needs at least two uncensored times.
EmpiricalStats empirical_stats(const FptSample& sample);

/// CSV with header "stream_index,fpt"; censored paths get an empty fpt field.
void write_sample_csv(std::ostream& os, const FptSample& sample);
FptSample read_sample_csv(std::istream& is);

namespace rng {

/// SplitMix64 finalizer; the core scrambler for keys and counters.
std::uint64_t mix(std::uint64_t z);

/// Deterministic sub-seed derivation, used for (seed, cell, repetition) style
/// hierarchies in the experiment runner.
std::uint64_t derive(std::uint64_t seed, std::uint64_t a);
std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

/// Counter-based stream: output n is mix(key + n*gamma), so any draw is
/// addressable directly and streams never share state.
struct Stream {
    std::uint64_t key = 0;
    std::uint64_t counter = 0;

    static Stream at(std::uint64_t seed, std::uint64_t stream_index);
    std::uint64_t next_u64();
    double next_uniform();  // strictly inside (0, 1)
    double next_normal();
};

}  // namespace rng

}  // namespace fpt
