#include "fpt/threshold_fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fpt {

namespace {

constexpr double kPenalty = 1e10;
constexpr int kConstraintGridPoints = 1001;
constexpr double kBoundSlack = 1e-12;

const numerics::Tolerance kAreaTol{1e-12, 1e-9, 4000};
const numerics::Tolerance kSimplexTol{1e-8, 1e-10, 5000};

bool is_flat(const CurvedThreshold& th) { return th.eps == 0.0 || th.lambda == 0.0; }

PiecewiseLinearThreshold constant_line(const CurvedThreshold& th, const FitWindow& win) {
    const double level = eval_curved(th, th.t0);
    return PiecewiseLinearThreshold(level, 0.0, 0.0, 0.5 * (win.tau0 + win.tau_star), th.t0);
}

std::vector<double> window_grid(const FitWindow& win, int n = kConstraintGridPoints) {
    std::vector<double> ts(n);
    const double step = win.width() / (n - 1);
    for (int i = 0; i < n; ++i) ts[i] = win.tau0 + i * step;
    ts.back() = win.tau_star;
    return ts;
}

double squared_area(const PiecewiseLinearThreshold& f, const PiecewiseLinearThreshold& g,
                    const FitWindow& win) {
    const double breakpoints[] = {f.t1, g.t1};
    return numerics::integrate(
        [&](double t) {
            const double d = eval_piecewise(f, t) - eval_piecewise(g, t);
            return d * d;
        },
        win.tau0, win.tau_star, kAreaTol, breakpoints);
}

double squared_area_to_curve(const PiecewiseLinearThreshold& f, const CurvedThreshold& th,
                             const FitWindow& win) {
    const double breakpoints[] = {f.t1};
    return numerics::integrate(
        [&](double t) {
            const double d = eval_piecewise(f, t) - eval_curved(th, t);
            return d * d;
        },
        win.tau0, win.tau_star, kAreaTol, breakpoints);
}

void require_converged(const numerics::MinimizeResult& res, const char* who) {
    if (!res.converged) throw std::runtime_error(std::string(who) + ": optimizer did not converge");
    if (res.objective >= kPenalty)
        throw std::runtime_error(std::string(who) + ": no feasible parameters found");
}

void verify_bounds(const PiecewiseLinearThreshold& up, const PiecewiseLinearThreshold& dn,
                   const CurvedThreshold& th, const FitWindow& win) {
    for (double t : window_grid(win)) {
        const double b = eval_curved(th, t);
        if (eval_piecewise(up, t) < b - kBoundSlack)
            throw std::runtime_error("fit_above_below: upper threshold dipped below the boundary");
        if (eval_piecewise(dn, t) > b + kBoundSlack)
            throw std::runtime_error("fit_above_below: lower threshold rose above the boundary");
    }
}

}  // namespace

const char* to_string(FitMethod m) {
    switch (m) {
        case FitMethod::above: return "above";
        case FitMethod::below: return "below";
        case FitMethod::between: return "between";
        case FitMethod::free: return "free";
    }
    return "unknown";
}

FitMethod fit_method_from_string(const std::string& name) {
    if (name == "above") return FitMethod::above;
    if (name == "below") return FitMethod::below;
    if (name == "between") return FitMethod::between;
    if (name == "free") return FitMethod::free;
    throw std::invalid_argument("unknown fit method: " + name);
}

double tangent_intersection(const CurvedThreshold& th, double tt1, double tt2) {
    if (!(tt1 < tt2))
        throw std::invalid_argument("tangent_intersection: requires tt1 < tt2");
    if (tt1 < th.t0)
        throw std::invalid_argument("tangent_intersection: tangency point before t0");
    if (th.lambda * (tt2 - tt1) < 1e-12)
        throw std::invalid_argument("tangent_intersection: tangency points degenerate");

    const double u1 = tt1 - th.t0;
    const double u2 = tt2 - th.t0;
    const double e1 = std::exp(-th.lambda * u1);
    const double e2 = std::exp(-th.lambda * u2);
    const double knot = (e1 * (1.0 + th.lambda * u1) - e2 * (1.0 + th.lambda * u2)) /
                        (th.lambda * (e1 - e2));
    return th.t0 + knot;
}

PiecewiseLinearThreshold build_above(const CurvedThreshold& th, const FitWindow& win, double t1) {
    if (!(t1 > win.tau0 && t1 < win.tau_star))
        throw std::invalid_argument("build_above: knot must lie strictly inside the window");
    const double b_lo = eval_curved(th, win.tau0);
    const double b_mid = eval_curved(th, t1);
    const double b_hi = eval_curved(th, win.tau_star);
    const double beta1 = (b_mid - b_lo) / (t1 - win.tau0);
    const double beta2 = (b_hi - b_mid) / (win.tau_star - t1);
    const double alpha1 = b_lo - beta1 * (win.tau0 - th.t0);
    return PiecewiseLinearThreshold(alpha1, beta1, beta2, t1, th.t0);
}

PiecewiseLinearThreshold build_below(const CurvedThreshold& th, double tt1, double tt2) {
    const double knot = tangent_intersection(th, tt1, tt2);
    const double beta1 = -th.lambda * th.eps * std::exp(-th.lambda * (tt1 - th.t0));
    const double beta2 = -th.lambda * th.eps * std::exp(-th.lambda * (tt2 - th.t0));
    const double alpha1 = eval_curved(th, tt1) - beta1 * (tt1 - th.t0);
    return PiecewiseLinearThreshold(alpha1, beta1, beta2, knot, th.t0);
}

std::pair<FitResult, FitResult> fit_above_below(const CurvedThreshold& th, const FitWindow& win) {
    if (is_flat(th)) {
        const auto line = constant_line(th, win);
        return {FitResult{line, 0.0, FitMethod::above, {line.t1}},
                FitResult{line, 0.0, FitMethod::below, {win.tau0, win.tau_star}}};
    }

    auto objective = [&](const std::vector<double>& v) {
        const double t1 = v[0], tt1 = v[1], tt2 = v[2];
        if (!(t1 > win.tau0 && t1 < win.tau_star)) return kPenalty;
        if (!(tt1 >= win.tau0 && tt1 <= tt2 && tt2 <= win.tau_star)) return kPenalty;
        if (th.lambda * (tt2 - tt1) < 1e-12) return kPenalty;
        return squared_area(build_above(th, win, t1), build_below(th, tt1, tt2), win);
    };

    const std::vector<double> init = {win.tau0 + 0.5 * win.width(), win.tau0 + 0.25 * win.width(),
                                      win.tau0 + 0.75 * win.width()};
    const auto res = numerics::minimize(objective, init, kSimplexTol);
    require_converged(res, "fit_above_below");

    const auto up = build_above(th, win, res.x[0]);
    const auto dn = build_below(th, res.x[1], res.x[2]);
    verify_bounds(up, dn, th, win);
    return {FitResult{up, res.objective, FitMethod::above, {res.x[0]}},
            FitResult{dn, res.objective, FitMethod::below, {res.x[1], res.x[2]}}};
}

FitResult fit_between(const FitResult& above, const FitResult& below, const FitWindow& win) {
    const auto& up = above.threshold;
    const auto& dn = below.threshold;
    if (up.alpha1 == dn.alpha1 && up.beta1 == dn.beta1 && up.beta2 == dn.beta2 && up.t1 == dn.t1)
        return FitResult{up, 0.0, FitMethod::between, {}};

    const double t0 = up.t0;
    const auto grid = window_grid(win);
    std::vector<double> up_vals(grid.size()), dn_vals(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        up_vals[i] = eval_piecewise(up, grid[i]);
        dn_vals[i] = eval_piecewise(dn, grid[i]);
    }

    auto objective = [&](const std::vector<double>& v) {
        if (!(v[3] > t0)) return kPenalty;
        const PiecewiseLinearThreshold cand(v[0], v[1], v[2], v[3], t0);
        for (size_t i = 0; i < grid.size(); ++i) {
            const double y = eval_piecewise(cand, grid[i]);
            // the corridor may pinch to zero width where the tangency points
            // meet the window edges, so leave rounding room
            if (y < dn_vals[i] - kBoundSlack || y > up_vals[i] + kBoundSlack) return kPenalty;
        }
        return squared_area(cand, up, win) + squared_area(cand, dn, win);
    };

    // The componentwise midpoint can land outside a thin corridor; the bound
    // thresholds themselves are always feasible, so seed from the best of the
    // three candidates.
    const std::vector<std::vector<double>> candidates = {
        {0.5 * (up.alpha1 + dn.alpha1), 0.5 * (up.beta1 + dn.beta1),
         0.5 * (up.beta2 + dn.beta2), 0.5 * (up.t1 + dn.t1)},
        {up.alpha1, up.beta1, up.beta2, up.t1},
        {dn.alpha1, dn.beta1, dn.beta2, dn.t1}};
    size_t seed = 0;
    double seed_objective = objective(candidates[0]);
    for (size_t i = 1; i < candidates.size(); ++i) {
        const double value = objective(candidates[i]);
        if (value < seed_objective) {
            seed_objective = value;
            seed = i;
        }
    }
    const auto res = numerics::minimize(objective, candidates[seed], kSimplexTol);
    require_converged(res, "fit_between");
    return FitResult{PiecewiseLinearThreshold(res.x[0], res.x[1], res.x[2], res.x[3], t0),
                     res.objective, FitMethod::between, {}};
}

namespace {

FitResult fit_free_seeded(const CurvedThreshold& th, const FitWindow& win,
                          const PiecewiseLinearThreshold& seed) {
    auto objective = [&](const std::vector<double>& v) {
        if (!(v[3] > th.t0)) return kPenalty;
        return squared_area_to_curve(PiecewiseLinearThreshold(v[0], v[1], v[2], v[3], th.t0), th,
                                     win);
    };
    const std::vector<double> init = {seed.alpha1, seed.beta1, seed.beta2, seed.t1};
    const auto res = numerics::minimize(objective, init, kSimplexTol);
    require_converged(res, "fit_free");
    return FitResult{PiecewiseLinearThreshold(res.x[0], res.x[1], res.x[2], res.x[3], th.t0),
                     res.objective, FitMethod::free, {}};
}

}  // namespace

FitResult fit_free(const CurvedThreshold& th, const FitWindow& win) {
    if (is_flat(th)) return FitResult{constant_line(th, win), 0.0, FitMethod::free, {}};
    const auto [up, dn] = fit_above_below(th, win);
    const auto betw = fit_between(up, dn, win);
    return fit_free_seeded(th, win, betw.threshold);
}

FitAll fit_all(const CurvedThreshold& th, const FitWindow& win) {
    if (is_flat(th)) {
        const auto line = constant_line(th, win);
        return FitAll{FitResult{line, 0.0, FitMethod::above, {line.t1}},
                      FitResult{line, 0.0, FitMethod::below, {win.tau0, win.tau_star}},
                      FitResult{line, 0.0, FitMethod::between, {}},
                      FitResult{line, 0.0, FitMethod::free, {}}};
    }
    auto [up, dn] = fit_above_below(th, win);
    auto betw = fit_between(up, dn, win);
    auto fr = fit_free_seeded(th, win, betw.threshold);
    return FitAll{std::move(up), std::move(dn), std::move(betw), std::move(fr)};
}

FitResult fit_threshold(const CurvedThreshold& th, const FitWindow& win, FitMethod method) {
    switch (method) {
        case FitMethod::above: return fit_above_below(th, win).first;
        case FitMethod::below: return fit_above_below(th, win).second;
        case FitMethod::between: {
            const auto [up, dn] = fit_above_below(th, win);
            return fit_between(up, dn, win);
        }
        case FitMethod::free: return fit_free(th, win);
    }
    throw std::invalid_argument("fit_threshold: unknown method");
}

}  // namespace fpt
