#pragma once

// Estimators of the process parameters (mu, sigma2) from observed passage
// times, given a fitted threshold: maximum likelihood over the two-piece law,
// moment matching against its numerical moments, and moment matching against
// the small-amplitude approximations. Plus the error metrics used to score
// estimators and fitted distributions.

#include "fpt/simulator.hpp"
#include "fpt/threshold_fit.hpp"

#include <functional>
#include <optional>
#include <string>

namespace fpt {

enum class EstimMethod { mle, me, me_eps };

const char* to_string(EstimMethod m);
EstimMethod estim_method_from_string(const std::string& name);

struct PhiEstimate {
    double mu_hat = 1.0;
    double sigma2_hat = 1.0;
    EstimMethod method = EstimMethod::mle;
    double objective_at_optimum = 0.0;
    bool converged = false;
};

struct ErrorReport {
    double r_me_mu = 0.0;
    double r_mse_mu = 0.0;
    double r_me_sigma2 = 0.0;
    double r_mse_sigma2 = 0.0;
    std::optional<double> r_iae;
};

/// Sum of log densities of the sample under the two-piece law. Observations
/// whose density underflows contribute a -1e10 sentinel instead of -inf so
/// simplex moves over the likelihood stay finite.
double log_likelihood(const FptSample& sample, const WienerParams& w,
                      const PiecewiseLinearThreshold& thr);

/// Maximum likelihood over (mu, sigma2); non-positive candidates cost 1e10.
PhiEstimate mle(const FptSample& sample, const PiecewiseLinearThreshold& thr,
                const PhiEstimate& init, double x0 = 0.0);

/// Matches the first two theoretical moments of the two-piece law to the
/// empirical ones, as least squares on the relative residuals.
PhiEstimate moment_estimate(const FptSample& sample, const PiecewiseLinearThreshold& thr,
                            const PhiEstimate& init, double x0 = 0.0);

/// Matches the small-amplitude mean/variance approximations to the sample
/// mean and (unbiased) sample variance.
PhiEstimate small_eps_moment_estimate(const FptSample& sample, const CurvedThreshold& th,
                                      const PhiEstimate& init, double x0 = 0.0);

/// Default starting point: moment inversion of the constant-threshold law at
/// level b0 + eps/2, refined through the small-amplitude estimator when the
/// amplitude is small (eps <= 0.2).
PhiEstimate default_phi_init(const FptSample& sample, const CurvedThreshold& th, double x0 = 0.0);

/// Relative integrated absolute error between a model cdf and the sample's
/// empirical step cdf, integrated from t0 until the model cdf exceeds
/// 1 - 1e-6 and normalized by the sample mean.
double r_iae(const std::function<double(double)>& model_cdf, const FptSample& sample,
             double t0 = 0.0);

/// Averages of the relative errors and squared relative errors of a batch of
/// estimates against the true parameters.
ErrorReport relative_errors(const std::vector<PhiEstimate>& estimates, const WienerParams& truth);

/// JSON report with mu_hat, sigma2_hat, method, converged, objective, and the
/// relative error fields when the truth is supplied.
std::string estimate_report_json(const PhiEstimate& estimate,
                                 const std::optional<WienerParams>& truth = {});

}  // namespace fpt
