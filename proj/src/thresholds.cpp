#include "fpt/thresholds.hpp"

#include <cmath>
#include <stdexcept>

namespace fpt {

WienerParams::WienerParams(double mu_, double sigma2_, double x0_, double t0_)
    : mu(mu_), sigma2(sigma2_), x0(x0_), t0(t0_) {
    if (!(mu > 0.0)) throw std::invalid_argument("WienerParams: mu must be positive");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("WienerParams: sigma2 must be positive");
    if (!std::isfinite(x0) || !std::isfinite(t0))
        throw std::invalid_argument("WienerParams: x0 and t0 must be finite");
}

CurvedThreshold::CurvedThreshold(double b0_, double eps_, double lambda_, double t0_)
    : b0(b0_), eps(eps_), lambda(lambda_), t0(t0_) {
    if (!(eps >= 0.0)) throw std::invalid_argument("CurvedThreshold: eps must be nonnegative");
    // lambda == 0 is admitted as the flat limit (constant boundary b0 + eps).
    if (!(lambda >= 0.0)) throw std::invalid_argument("CurvedThreshold: lambda must be nonnegative");
    if (!std::isfinite(b0) || !std::isfinite(t0))
        throw std::invalid_argument("CurvedThreshold: b0 and t0 must be finite");
}

PiecewiseLinearThreshold::PiecewiseLinearThreshold(double alpha1_, double beta1_, double beta2_,
                                                   double t1_, double t0_)
    : alpha1(alpha1_), beta1(beta1_), beta2(beta2_), t1(t1_), t0(t0_) {
    if (!(t1 > t0))
        throw std::invalid_argument("PiecewiseLinearThreshold: knot t1 must lie after t0");
    if (!std::isfinite(alpha1) || !std::isfinite(beta1) || !std::isfinite(beta2))
        throw std::invalid_argument("PiecewiseLinearThreshold: parameters must be finite");
}

FitWindow::FitWindow(double tau0_, double tau_star_) : tau0(tau0_), tau_star(tau_star_) {
    if (!(tau0 < tau_star)) throw std::invalid_argument("FitWindow: requires tau0 < tau_star");
}

double eval_curved(const CurvedThreshold& th, double t) {
    if (t < th.t0) throw std::domain_error("eval_curved: t before the threshold start time");
    return th.b0 + th.eps * std::exp(-th.lambda * (t - th.t0));
}

double eval_piecewise(const PiecewiseLinearThreshold& th, double t) {
    if (t < th.t0) throw std::domain_error("eval_piecewise: t before the threshold start time");
    if (t <= th.t1) return th.alpha1 + th.beta1 * (t - th.t0);
    return th.alpha2() + th.beta2 * (t - th.t1);
}

namespace {

// p-quantile of the passage law through the tangent line at elapsed time s.
// Tangents are global lower bounds of the convex boundary, so the passage law
// through any of them bounds P(T_b <= t) from above; the tangent hugging the
// knee gives a far tighter lower window end than the constant floor when the
// amplitude is large.
double tangent_law_quantile(const WienerParams& w, const CurvedThreshold& th, double p,
                            double s) {
    const double decay = th.eps * std::exp(-th.lambda * s);
    const double slope = -th.lambda * decay;
    const double alpha = th.b0 + decay * (1.0 + th.lambda * s);  // tangent value at t0
    const double gap = alpha - w.x0;
    return numerics::ig_quantile(p, gap / (w.mu - slope), gap * gap / w.sigma2);
}

}  // namespace

FitWindow fit_window(const WienerParams& w, const CurvedThreshold& th, double p_low,
                     double p_high, double time_cap) {
    if (!(th.b0 > w.x0)) throw std::invalid_argument("fit_window: requires b0 > x0");
    if (!(p_low > 0.0 && p_low < p_high && p_high < 1.0))
        throw std::invalid_argument("fit_window: requires 0 < p_low < p_high < 1");

    // Lower end: quantile of the passage law to the constant floor b0,
    // tightened by the best tangent-line bound (a coarse scan plus one
    // refinement pass; the quantile is smooth and single-peaked in s).
    const double gap = th.b0 - w.x0;
    double u0 = numerics::ig_quantile(p_low, gap / w.mu, gap * gap / w.sigma2);
    if (th.eps > 0.0 && th.lambda > 0.0) {
        double s_best = 0.0;
        double span = 20.0 / th.lambda;
        for (int round = 0; round < 3; ++round) {
            const double lo = std::max(0.0, s_best - span);
            const int n = round == 0 ? 64 : 16;
            for (int i = 0; i <= n; ++i) {
                const double s = round == 0 ? span * i / n : lo + 2.0 * span * i / n;
                const double cand = tangent_law_quantile(w, th, p_low, s);
                if (cand > u0) {
                    u0 = cand;
                    s_best = s;
                }
            }
            span /= n;
        }
    }

    // Upper end: P(X(t) >= b(t)) = p_high, i.e. the standardized distance of
    // the boundary from the Gaussian marginal equals the (1 - p_high) normal
    // quantile. The distance decreases without bound since mu > 0.
    const double z_target = numerics::normal_quantile(1.0 - p_high);
    const double sigma = std::sqrt(w.sigma2);
    auto standardized_gap = [&](double u) {
        const double bt = th.b0 + th.eps * std::exp(-th.lambda * u);
        return (bt - w.x0 - w.mu * u) / (sigma * std::sqrt(u)) - z_target;
    };

    double lo = u0;
    double hi = 2.0 * u0;
    while (standardized_gap(hi) > 0.0) {
        hi *= 2.0;
        if (hi > time_cap)
            throw std::runtime_error("fit_window: failed to bracket tau_star below the time cap");
    }
    const double u_star = numerics::find_root(standardized_gap, {lo, hi}, {1e-13, 1e-14, 300});

    return FitWindow(th.t0 + u0, th.t0 + u_star);
}

PiecewiseLinearThreshold small_lambda_line(const CurvedThreshold& th) {
    const double slope = -th.lambda * th.eps;
    return PiecewiseLinearThreshold(th.b0 + th.eps, slope, slope, th.t0 + 1.0, th.t0);
}

}  // namespace fpt
