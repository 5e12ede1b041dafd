#pragma once

// Domain types for the drifted Wiener process and its firing thresholds: the
// exponentially decaying boundary, the continuous two-piece linear boundary,
// and the time window over which the linear approximation is fitted. All
// types are immutable values; all operations are pure.

#include "fpt/numerics.hpp"

namespace fpt {

/// Drifted Wiener process dX = mu dt + sigma dW, X(t0) = x0.
struct WienerParams {
    WienerParams(double mu, double sigma2, double x0 = 0.0, double t0 = 0.0);
    double mu;
    double sigma2;
    double x0;
    double t0;
};

/// Exponentially decaying boundary b(t) = b0 + eps * exp(-lambda * (t - t0)).
struct CurvedThreshold {
    CurvedThreshold(double b0, double eps, double lambda, double t0 = 0.0);
    double b0;
    double eps;
    double lambda;
    double t0;
};

/// Continuous two-piece linear boundary: alpha1 + beta1*(t - t0) up to the
/// knot t1, then alpha2 + beta2*(t - t1). alpha2 is always derived from
/// (alpha1, beta1, t1), so continuity at the knot cannot be violated.
struct PiecewiseLinearThreshold {
    PiecewiseLinearThreshold(double alpha1, double beta1, double beta2, double t1,
                             double t0 = 0.0);
    double alpha1;
    double beta1;
    double beta2;
    double t1;
    double t0;

    double alpha2() const { return alpha1 + beta1 * (t1 - t0); }
};

/// Time interval [tau0, tau_star] carrying at least 99% of the first-passage
/// mass (for the default 0.005/0.995 probability pair).
struct FitWindow {
    FitWindow(double tau0, double tau_star);
    double tau0;
    double tau_star;

    double width() const { return tau_star - tau0; }
};

double eval_curved(const CurvedThreshold& th, double t);
double eval_piecewise(const PiecewiseLinearThreshold& th, double t);

/// Computes the fitting window. tau0 is the largest p_low quantile over a
/// family of passage laws that bound P(T_b <= t) from above: the constant
/// floor b0 and the tangent lines of the convex boundary (which dominate the
/// floor bound when the amplitude is large), so P(T_b <= tau0) <= p_low holds
/// by construction. tau_star solves P(X(tau_star) >= b(tau_star)) = p_high
/// via the Gaussian marginal; its bracketing search doubles outward from tau0
/// and is capped at time_cap units past t0.
FitWindow fit_window(const WienerParams& w, const CurvedThreshold& th,
                     double p_low = 0.005, double p_high = 0.995,
                     double time_cap = 1e6);

/// First-order threshold for slowly decaying boundaries: the single line
/// b0 + eps - lambda*eps*(t - t0), expressed as a degenerate two-piece
/// threshold with equal slopes.
PiecewiseLinearThreshold small_lambda_line(const CurvedThreshold& th);

}  // namespace fpt
