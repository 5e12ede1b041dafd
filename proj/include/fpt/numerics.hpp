#pragma once

// Self-contained scalar numerics: normal / inverse Gaussian distribution
// functions, adaptive Gauss-Kronrod quadrature, bracketed root finding and a
// derivative-free simplex minimizer. Everything is a pure function of its
// arguments and safe to call concurrently.

#include <functional>
#include <span>
#include <vector>

namespace fpt::numerics {

struct Tolerance {
    double abs_tol = 1e-9;
    double rel_tol = 1e-7;
    int max_iter = 2000;
};

struct Bracket {
    double lo = 0.0;
    double hi = 1.0;
};

/// Standard normal cdf. Saturates cleanly at 0/1 in the far tails.
double normal_cdf(double z);

/// log(normal_cdf(z)), stable for arbitrarily negative z.
double log_normal_cdf(double z);

/// Inverse standard normal cdf (Wichura's AS241), p in (0,1).
double normal_quantile(double p);

/// Inverse Gaussian IG(mean, shape) density at t; 0 for t <= 0.
double ig_pdf(double t, double mean, double shape);

/// Inverse Gaussian IG(mean, shape) cdf at t. The exp(2*shape/mean) factor is
/// assembled in log space once the exponent passes 700 to avoid overflow.
double ig_cdf(double t, double mean, double shape);

/// Inverse of ig_cdf in t by bisection: |ig_cdf(result) - p| <= tol.abs_tol.
double ig_quantile(double p, double mean, double shape,
                   const Tolerance& tol = {1e-12, 1e-10, 300});

/// Adaptive Gauss-Kronrod (G7,K15) quadrature of f over [a, b]. The estimated
/// error is kept below max(abs_tol, rel_tol*|result|); tol.max_iter bounds the
/// number of panels. Interior breakpoints become initial panel edges, so
/// integrands with known kinks converge fast.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const Tolerance& tol = {}, std::span<const double> breakpoints = {});

/// Bisection root finding; requires a sign change over the bracket.
double find_root(const std::function<double(double)>& f, Bracket bracket,
                 const Tolerance& tol = {1e-10, 1e-12, 200});

struct MinimizeResult {
    std::vector<double> x;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Nelder-Mead simplex minimization with reflection/expansion/contraction/
/// shrink coefficients (1, 2, 0.5, 0.5). Converges when the simplex diameter
/// drops below tol.abs_tol; restarts twice from the incumbent best point so a
/// simplex stranded on a flat penalty plateau gets a second chance. The result
/// never has a higher objective than the initial point.
MinimizeResult minimize(const std::function<double(const std::vector<double>&)>& objective,
                        const std::vector<double>& initial,
                        const Tolerance& tol = {1e-8, 1e-10, 5000});

}  // namespace fpt::numerics
