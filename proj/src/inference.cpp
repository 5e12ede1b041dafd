#include "fpt/inference.hpp"

#include "fpt/fpt_law.hpp"
#include "fpt/numerics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fpt {

namespace {

constexpr double kPenalty = 1e10;
constexpr double kLogUnderflowSentinel = -1e10;

const numerics::Tolerance kEstimTol{1e-9, 1e-10, 4000};

struct SampleMoments {
    double mean;
    double variance;       // unbiased
    double second_moment;  // mean^2 + unbiased variance
};

SampleMoments sample_moments(const FptSample& sample, const char* who) {
    const auto& ts = sample.times;
    if (ts.size() < 2)
        throw std::invalid_argument(std::string(who) + ": needs at least two observations");
    double mean = 0.0;
    for (double t : ts) mean += t;
    mean /= static_cast<double>(ts.size());
    double ss = 0.0;
    for (double t : ts) ss += (t - mean) * (t - mean);
    const double variance = ss / (static_cast<double>(ts.size()) - 1.0);
    return {mean, variance, variance + mean * mean};
}

}  // namespace

const char* to_string(EstimMethod m) {
    switch (m) {
        case EstimMethod::mle: return "mle";
        case EstimMethod::me: return "me";
        case EstimMethod::me_eps: return "me-eps";
    }
    return "unknown";
}

EstimMethod estim_method_from_string(const std::string& name) {
    if (name == "mle") return EstimMethod::mle;
    if (name == "me") return EstimMethod::me;
    if (name == "me-eps" || name == "me_eps") return EstimMethod::me_eps;
    throw std::invalid_argument("unknown estimation method: " + name);
}

double log_likelihood(const FptSample& sample, const WienerParams& w,
                      const PiecewiseLinearThreshold& thr) {
    if (sample.times.empty())
        throw std::invalid_argument("log_likelihood: empty sample");
    double total = 0.0;
    for (double r : sample.times) {
        if (!(r > w.t0))
            throw std::domain_error("log_likelihood: observation at or before t0");
        const double f = piecewise_fpt_pdf(w, thr, r);
        const double lf = std::log(f);
        total += std::isfinite(lf) ? lf : kLogUnderflowSentinel;
    }
    return total;
}

PhiEstimate mle(const FptSample& sample, const PiecewiseLinearThreshold& thr,
                const PhiEstimate& init, double x0) {
    if (sample.times.empty()) throw std::invalid_argument("mle: empty sample");
    if (!(thr.alpha1 > x0)) throw std::domain_error("mle: threshold must start above x0");

    auto negative_ll = [&](const std::vector<double>& v) {
        if (!(v[0] > 0.0) || !(v[1] > 0.0)) return kPenalty;
        const WienerParams w(v[0], v[1], x0, thr.t0);
        return -log_likelihood(sample, w, thr);
    };
    const auto res =
        numerics::minimize(negative_ll, {init.mu_hat, init.sigma2_hat}, kEstimTol);
    return {res.x[0], res.x[1], EstimMethod::mle, -res.objective, res.converged};
}

PhiEstimate moment_estimate(const FptSample& sample, const PiecewiseLinearThreshold& thr,
                            const PhiEstimate& init, double x0) {
    const auto emp = sample_moments(sample, "moment_estimate");
    if (!(thr.alpha1 > x0))
        throw std::domain_error("moment_estimate: threshold must start above x0");

    auto residual = [&](const std::vector<double>& v) {
        if (!(v[0] > 0.0) || !(v[1] > 0.0) || !(v[0] > thr.beta2)) return kPenalty;
        try {
            const auto m = fpt_moments(WienerParams(v[0], v[1], x0, thr.t0), thr);
            const double r1 = (m.mean - emp.mean) / emp.mean;
            const double r2 = (m.second_moment - emp.second_moment) / emp.second_moment;
            return r1 * r1 + r2 * r2;
        } catch (const std::exception&) {
            return kPenalty;
        }
    };
    const auto res = numerics::minimize(residual, {init.mu_hat, init.sigma2_hat}, kEstimTol);
    return {res.x[0], res.x[1], EstimMethod::me, res.objective, res.converged};
}

PhiEstimate small_eps_moment_estimate(const FptSample& sample, const CurvedThreshold& th,
                                      const PhiEstimate& init, double x0) {
    const auto emp = sample_moments(sample, "small_eps_moment_estimate");

    auto residual = [&](const std::vector<double>& v) {
        if (!(v[0] > 0.0) || !(v[1] > 0.0)) return kPenalty;
        const WienerParams w(v[0], v[1], x0, th.t0);
        const double r1 = (small_eps_mean(w, th) - emp.mean) / emp.mean;
        const double r2 = (small_eps_var(w, th) - emp.variance) / emp.variance;
        return r1 * r1 + r2 * r2;
    };
    const auto res = numerics::minimize(residual, {init.mu_hat, init.sigma2_hat}, kEstimTol);
    return {res.x[0], res.x[1], EstimMethod::me_eps, res.objective, res.converged};
}

PhiEstimate default_phi_init(const FptSample& sample, const CurvedThreshold& th, double x0) {
    const auto emp = sample_moments(sample, "default_phi_init");
    const double gap = th.b0 + 0.5 * th.eps - x0;
    // Moment inversion of the constant-threshold (inverse Gaussian) law.
    PhiEstimate base;
    base.mu_hat = gap / emp.mean;
    base.sigma2_hat = std::max(emp.variance * std::pow(base.mu_hat, 3) / gap, 1e-12);
    base.method = EstimMethod::me;
    base.converged = true;
    if (th.eps <= 0.2) {
        try {
            return small_eps_moment_estimate(sample, th, base, x0);
        } catch (const std::exception&) {
            return base;
        }
    }
    return base;
}

double r_iae(const std::function<double(double)>& model_cdf, const FptSample& sample, double t0) {
    if (sample.times.size() < 2)
        throw std::invalid_argument("r_iae: needs at least two observations");

    std::vector<double> sorted = sample.times;
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    double mean = 0.0;
    for (double t : sorted) mean += t;
    mean /= n;

    // Distinct jump locations and the empirical cdf level after each jump.
    std::vector<double> edges = {t0};
    std::vector<double> levels = {0.0};
    for (size_t i = 0; i < sorted.size(); ++i) {
        if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
        edges.push_back(sorted[i]);
        levels.push_back(static_cast<double>(i + 1) / n);
    }

    // Tail end: extend past the last observation until the model has
    // accumulated all but 1e-6 of its mass.
    double tail_end = edges.back();
    double step = std::max(mean, edges.back() - t0);
    int guard = 0;
    while (model_cdf(tail_end) <= 1.0 - 1e-6) {
        tail_end += step;
        step *= 2.0;
        if (++guard > 500)
            throw std::runtime_error("r_iae: model cdf never accumulates its mass");
    }
    edges.push_back(tail_end);

    const numerics::Tolerance seg_tol{1e-10, 1e-6, 2000};
    double area = 0.0;
    for (size_t j = 0; j + 1 < edges.size(); ++j) {
        if (!(edges[j + 1] > edges[j])) continue;
        const double level = levels[std::min(j, levels.size() - 1)];
        area += numerics::integrate(
            [&](double t) { return std::fabs(model_cdf(t) - level); }, edges[j], edges[j + 1],
            seg_tol);
    }
    return area / mean;
}

ErrorReport relative_errors(const std::vector<PhiEstimate>& estimates, const WienerParams& truth) {
    if (estimates.empty()) throw std::invalid_argument("relative_errors: empty estimate list");
    ErrorReport rep;
    const auto n = static_cast<double>(estimates.size());
    for (const auto& e : estimates) {
        const double em = (e.mu_hat - truth.mu) / truth.mu;
        const double es = (e.sigma2_hat - truth.sigma2) / truth.sigma2;
        rep.r_me_mu += em / n;
        rep.r_mse_mu += em * em / n;
        rep.r_me_sigma2 += es / n;
        rep.r_mse_sigma2 += es * es / n;
    }
    return rep;
}

std::string estimate_report_json(const PhiEstimate& estimate,
                                 const std::optional<WienerParams>& truth) {
    nlohmann::json j;
    j["mu_hat"] = estimate.mu_hat;
    j["sigma2_hat"] = estimate.sigma2_hat;
    j["method"] = to_string(estimate.method);
    j["converged"] = estimate.converged;
    j["objective"] = estimate.objective_at_optimum;
    if (truth) {
        const auto rep = relative_errors({estimate}, *truth);
        j["r_me_mu"] = rep.r_me_mu;
        j["r_mse_mu"] = rep.r_mse_mu;
        j["r_me_sigma2"] = rep.r_me_sigma2;
        j["r_mse_sigma2"] = rep.r_mse_sigma2;
    }
    return j.dump(2);
}

}  // namespace fpt
