#pragma once

// Closed-form first-passage-time law of the drifted Wiener process through
// linear and continuous two-piece linear thresholds: densities, cdf, numerical
// moments, and the small-amplitude reference statistics for the exponentially
// decaying boundary.

#include "fpt/thresholds.hpp"

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace fpt {

struct FptMoments {
    double mean = 0.0;
    double second_moment = 0.0;
    double variance = 0.0;
    double cv = 0.0;
    double total_mass = 0.0;
};

/// First-passage density at t through the line alpha + beta*(t - t0). For
/// mu > beta this is the inverse Gaussian law IG((alpha-x0)/(mu-beta),
/// (alpha-x0)^2/sigma2); for mu <= beta the same expression is returned and
/// the law is defective (total mass below one).
double linear_fpt_pdf(const WienerParams& w, double alpha, double beta, double t);

/// Joint density of the path at the given (time, level) points, constrained
/// never to touch the threshold up to the last time: a product of Gaussian
/// transition kernels and image-term survival factors. A level on the
/// threshold gives zero (absorption).
double constrained_transition_density(const WienerParams& w, const PiecewiseLinearThreshold& thr,
                                      std::span<const std::pair<double, double>> points);

/// First-passage density through the two-piece threshold. Up to the knot this
/// is the linear-threshold law for the first piece; past the knot it is the
/// closed-form expression obtained by differentiating the renewal
/// decomposition at the knot. Prefactors are assembled in log space so small
/// (t - t0) and (t - t1) increments cannot underflow to NaN.
double piecewise_fpt_pdf(const WienerParams& w, const PiecewiseLinearThreshold& thr, double t);

/// cdf of the two-piece law: adaptive quadrature of the density with the knot
/// as a mandatory breakpoint.
double piecewise_fpt_cdf(const WienerParams& w, const PiecewiseLinearThreshold& thr, double t);

/// Time horizon beyond which the survival probability is below tail_mass,
/// from the Gaussian marginal bound P(T > t) <= P(X(t) < threshold(t)).
/// Requires mu > beta2 so the bound eventually decays.
double fpt_horizon(const WienerParams& w, const PiecewiseLinearThreshold& thr,
                   double tail_mass = 1e-10);

/// Mean, second moment, variance and CV by quadrature over [t0, horizon],
/// with the horizon chosen so the neglected tail mass is below 1e-10.
FptMoments fpt_moments(const WienerParams& w, const PiecewiseLinearThreshold& thr);

/// Small-amplitude approximation of the passage-time mean for the decaying
/// boundary: b0/mu + (eps/mu) * exp(b0*(mu - sqrt(mu^2 + 2*lambda*sigma2))/sigma2).
double small_eps_mean(const WienerParams& w, const CurvedThreshold& th);

/// Small-amplitude approximation of the passage-time variance. The reference
/// level theta0 defaults to b0. Note the (b0 - 1) factor in the second term
/// is kept exactly as published even though it is not scale invariant.
double small_eps_var(const WienerParams& w, const CurvedThreshold& th,
                     std::optional<double> theta0 = {});

/// Precomputed cdf on a dense grid with linear interpolation between nodes;
/// used where the cdf is evaluated many thousands of times.
class CdfTable {
public:
    static CdfTable build(const WienerParams& w, const PiecewiseLinearThreshold& thr,
                          double t_hi, int n_points = 4096);
    double operator()(double t) const;
    double t_hi() const { return ts_.back(); }
    double mass() const { return values_.back(); }

private:
    std::vector<double> ts_;
    std::vector<double> values_;
};

}  // namespace fpt
