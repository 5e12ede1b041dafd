#include "fpt/fpt_law.hpp"

#include "fpt/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fpt {

namespace {

constexpr double kLog2Pi = 1.83787706640934548356;

void check_pairing(const WienerParams& w, const PiecewiseLinearThreshold& thr) {
    if (w.t0 != thr.t0)
        throw std::invalid_argument("fpt_law: process and threshold start times differ");
    if (!(thr.alpha1 > w.x0))
        throw std::domain_error("fpt_law: threshold must start above the process (alpha1 > x0)");
}

// log of (alpha - x0)/sqrt(2 pi sigma2 d^3) * exp(-(alpha - x0 - speed*d)^2/(2 sigma2 d))
double log_linear_pdf(double gap, double speed, double sigma2, double d) {
    const double arg = gap - speed * d;
    return std::log(gap) - 0.5 * (kLog2Pi + std::log(sigma2) + 3.0 * std::log(d)) -
           arg * arg / (2.0 * sigma2 * d);
}

}  // namespace

double linear_fpt_pdf(const WienerParams& w, double alpha, double beta, double t) {
    if (!(alpha > w.x0))
        throw std::domain_error("linear_fpt_pdf: threshold must start above the process");
    if (!(t > w.t0)) return 0.0;
    return std::exp(log_linear_pdf(alpha - w.x0, w.mu - beta, w.sigma2, t - w.t0));
}

double constrained_transition_density(const WienerParams& w, const PiecewiseLinearThreshold& thr,
                                      std::span<const std::pair<double, double>> points) {
    check_pairing(w, thr);
    if (points.empty())
        throw std::invalid_argument("constrained_transition_density: needs at least one point");

    double prev_t = w.t0;
    double prev_x = w.x0;
    double prev_gap = thr.alpha1 - w.x0;
    double density = 1.0;
    for (const auto& [t, x] : points) {
        const double dt = t - prev_t;
        if (!(dt > 0.0))
            throw std::invalid_argument("constrained_transition_density: times must be strictly increasing");
        const double level = eval_piecewise(thr, t);
        if (x > level)
            throw std::domain_error("constrained_transition_density: point above the threshold");
        const double gap = level - x;
        const double image = -std::expm1(-2.0 * gap * prev_gap / (w.sigma2 * dt));
        const double z = x - prev_x - w.mu * dt;
        const double kernel =
            std::exp(-z * z / (2.0 * w.sigma2 * dt)) / std::sqrt(2.0 * M_PI * w.sigma2 * dt);
        density *= image * kernel;
        prev_t = t;
        prev_x = x;
        prev_gap = gap;
    }
    return density;
}

double piecewise_fpt_pdf(const WienerParams& w, const PiecewiseLinearThreshold& thr, double t) {
    check_pairing(w, thr);
    if (!(t > w.t0)) return 0.0;

    if (t <= thr.t1)
        return std::exp(log_linear_pdf(thr.alpha1 - w.x0, w.mu - thr.beta1, w.sigma2, t - w.t0));

    const double d0 = t - w.t0;        // elapsed since the start
    const double d1 = t - thr.t1;      // elapsed since the knot
    const double dk = thr.t1 - w.t0;   // knot offset
    const double alpha2 = thr.alpha2();
    const double sigma2 = w.sigma2;

    const double gauss_arg = alpha2 - w.x0 - (w.mu - thr.beta2) * d1 - w.mu * dk;
    const double log_pref = -0.5 * (kLog2Pi + std::log(sigma2) + 3.0 * std::log(d0)) -
                            gauss_arg * gauss_arg / (2.0 * sigma2 * d0);

    const double scale = std::sqrt(d1 / (sigma2 * dk * d0));
    const double a_coef = alpha2 - w.x0 - thr.beta2 * dk;
    const double b_coef = alpha2 + w.x0 - thr.beta2 * dk - 2.0 * thr.alpha1;
    const double q = 2.0 * d1 * (thr.alpha1 - w.x0) * (alpha2 - thr.alpha1 - thr.beta2 * dk) /
                     (sigma2 * dk * d0);

    const double term_a = a_coef * numerics::normal_cdf(a_coef * scale);
    // The image term can carry exp(+|q|) balanced against a deep normal tail;
    // assembling it in log space keeps the product finite.
    double term_b = 0.0;
    if (b_coef != 0.0) {
        const double magnitude =
            std::exp(std::log(std::fabs(b_coef)) - q + numerics::log_normal_cdf(b_coef * scale));
        term_b = b_coef > 0.0 ? magnitude : -magnitude;
    }
    const double bracket = std::max(term_a - term_b, 0.0);
    if (bracket == 0.0) return 0.0;
    return std::exp(log_pref + std::log(bracket));
}

double piecewise_fpt_cdf(const WienerParams& w, const PiecewiseLinearThreshold& thr, double t) {
    check_pairing(w, thr);
    if (!(t > w.t0)) return 0.0;
    const double breakpoints[] = {thr.t1};
    const double value = numerics::integrate(
        [&](double s) { return piecewise_fpt_pdf(w, thr, s); }, w.t0, t,
        {1e-10, 1e-8, 4000}, breakpoints);
    return std::max(value, 0.0);
}

double fpt_horizon(const WienerParams& w, const PiecewiseLinearThreshold& thr, double tail_mass) {
    check_pairing(w, thr);
    if (!(w.mu > thr.beta2))
        throw std::domain_error("fpt_horizon: requires mu > beta2 (certain passage)");
    if (!(tail_mass > 0.0 && tail_mass < 0.5))
        throw std::invalid_argument("fpt_horizon: tail_mass must lie in (0, 0.5)");

    const double z_tail = numerics::normal_quantile(tail_mass);
    const double sigma = std::sqrt(w.sigma2);
    auto standardized = [&](double u) {
        return (eval_piecewise(thr, w.t0 + u) - w.x0 - w.mu * u) / (sigma * std::sqrt(u));
    };
    double u = std::max(thr.t1 - thr.t0, 1.0);
    for (int i = 0; i < 400; ++i) {
        if (standardized(u) <= z_tail) return w.t0 + u;
        u *= 2.0;
    }
    throw std::runtime_error("fpt_horizon: survival bound failed to decay");
}

FptMoments fpt_moments(const WienerParams& w, const PiecewiseLinearThreshold& thr) {
    check_pairing(w, thr);
    if (!(w.mu > thr.beta2))
        throw std::domain_error("fpt_moments: requires mu > beta2 for finite moments");

    const double hi = fpt_horizon(w, thr, 1e-10);
    const double breakpoints[] = {thr.t1};
    const numerics::Tolerance tol{1e-9, 1e-7, 4000};
    auto pdf = [&](double s) { return piecewise_fpt_pdf(w, thr, s); };

    FptMoments m;
    m.total_mass = numerics::integrate(pdf, w.t0, hi, tol, breakpoints);
    m.mean = numerics::integrate([&](double s) { return s * pdf(s); }, w.t0, hi, tol, breakpoints);
    m.second_moment =
        numerics::integrate([&](double s) { return s * s * pdf(s); }, w.t0, hi, tol, breakpoints);
    m.variance = std::max(m.second_moment - m.mean * m.mean, 0.0);
    m.cv = std::sqrt(m.variance) / m.mean;
    return m;
}

double small_eps_mean(const WienerParams& w, const CurvedThreshold& th) {
    if (!(th.b0 > w.x0)) throw std::domain_error("small_eps_mean: requires b0 > x0");
    const double root = std::sqrt(w.mu * w.mu + 2.0 * th.lambda * w.sigma2);
    return th.b0 / w.mu + th.eps / w.mu * std::exp(th.b0 * (w.mu - root) / w.sigma2);
}

double small_eps_var(const WienerParams& w, const CurvedThreshold& th,
                     std::optional<double> theta0) {
    if (!(th.b0 > w.x0)) throw std::domain_error("small_eps_var: requires b0 > x0");
    const double ref = theta0.value_or(th.b0);
    const double mu = w.mu, s2 = w.sigma2;
    const double root = std::sqrt(mu * mu + 2.0 * th.lambda * s2);
    const double expo = std::exp(th.b0 * (mu - root) / s2);
    return th.b0 * s2 / (mu * mu * mu) + s2 * th.eps * (th.b0 - 1.0) / (mu * mu * mu) +
           2.0 * th.eps / (mu * mu) * (mu * th.b0 / root + s2 / (2.0 * mu) - ref) * expo;
}

CdfTable CdfTable::build(const WienerParams& w, const PiecewiseLinearThreshold& thr, double t_hi,
                         int n_points) {
    check_pairing(w, thr);
    if (!(t_hi > w.t0)) throw std::invalid_argument("CdfTable: horizon must lie after t0");
    if (n_points < 2) throw std::invalid_argument("CdfTable: needs at least two grid points");

    CdfTable table;
    table.ts_.reserve(n_points + 1);
    const double step = (t_hi - w.t0) / (n_points - 1);
    for (int i = 0; i < n_points; ++i) table.ts_.push_back(w.t0 + i * step);
    if (thr.t1 > w.t0 && thr.t1 < t_hi) {
        table.ts_.push_back(thr.t1);
        std::sort(table.ts_.begin(), table.ts_.end());
    }

    table.values_.resize(table.ts_.size());
    table.values_[0] = 0.0;
    auto pdf = [&](double s) { return piecewise_fpt_pdf(w, thr, s); };
    for (size_t i = 1; i < table.ts_.size(); ++i) {
        double inc = 0.0;
        if (table.ts_[i] > table.ts_[i - 1])
            inc = numerics::integrate(pdf, table.ts_[i - 1], table.ts_[i], {1e-11, 1e-9, 64});
        table.values_[i] = table.values_[i - 1] + inc;
    }
    return table;
}

double CdfTable::operator()(double t) const {
    if (t <= ts_.front()) return 0.0;
    if (t >= ts_.back()) return values_.back();
    const auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
    const size_t i = static_cast<size_t>(it - ts_.begin());
    const double w = (t - ts_[i - 1]) / (ts_[i] - ts_[i - 1]);
    return values_[i - 1] + w * (values_[i] - values_[i - 1]);
}

}  // namespace fpt
