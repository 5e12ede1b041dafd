#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fpt/threshold_fit.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

using namespace fpt;

namespace {

// ---- independent lattice-search machinery -------------------------------
//
// Reimplements the chord/tangent geometry and the squared-distance areas from
// scratch (piecewise-linear functions, exact Simpson on polynomial pieces) so
// the simplex results can be checked against brute-force searches.

struct Line2 {
    double a1, m1, m2, knot, t0;  // value a1 at t0, slope m1 to knot, then m2
    double operator()(double t) const {
        if (t <= knot) return a1 + m1 * (t - t0);
        return a1 + m1 * (knot - t0) + m2 * (t - knot);
    }
};

double exact_piece_integral(const std::function<double(double)>& f, double a, double b) {
    // Simpson: exact for the quadratic pieces that arise between knots.
    return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
}

double area_between(const Line2& up, const Line2& dn, double lo, double hi) {
    std::vector<double> cuts = {lo, hi};
    if (up.knot > lo && up.knot < hi) cuts.push_back(up.knot);
    if (dn.knot > lo && dn.knot < hi) cuts.push_back(dn.knot);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i)
        total += exact_piece_integral(
            [&](double t) {
                const double d = up(t) - dn(t);
                return d * d;
            },
            cuts[i], cuts[i + 1]);
    return total;
}

Line2 chords_above(const CurvedThreshold& th, const FitWindow& win, double t1) {
    const double b0 = eval_curved(th, win.tau0);
    const double bm = eval_curved(th, t1);
    const double bs = eval_curved(th, win.tau_star);
    const double m1 = (bm - b0) / (t1 - win.tau0);
    const double m2 = (bs - bm) / (win.tau_star - t1);
    return {b0 - m1 * (win.tau0 - th.t0), m1, m2, t1, th.t0};
}

Line2 tangents_below(const CurvedThreshold& th, double tt1, double tt2) {
    const double m1 = -th.lambda * th.eps * std::exp(-th.lambda * (tt1 - th.t0));
    const double m2 = -th.lambda * th.eps * std::exp(-th.lambda * (tt2 - th.t0));
    const double c1 = eval_curved(th, tt1) - m1 * (tt1 - th.t0);  // value at t0
    const double c2 = eval_curved(th, tt2) - m2 * (tt2 - th.t0);
    const double knot = th.t0 + (c2 - c1) / (m1 - m2);
    return {c1, m1, m2, knot, th.t0};
}

}  // namespace

TEST_CASE("tangent_intersection pinned value and properties") {
    const CurvedThreshold th(1.0, 1.0, 1.0, 0.0);
    // long-double oracle: (1 - 2/e) / (1 - 1/e)
    CHECK(tangent_intersection(th, 0.0, 1.0) ==
          doctest::Approx(0.418023293130673576).epsilon(1e-14));
    CHECK_THROWS_AS(tangent_intersection(th, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(tangent_intersection(th, 2.0, 1.0), std::invalid_argument);
    for (double a : {0.1, 0.5, 2.0})
        for (double gap : {0.2, 1.0, 4.0}) {
            const double mid = tangent_intersection(th, a, a + gap);
            CHECK(mid > a);
            CHECK(mid < a + gap);
        }
    const CurvedThreshold slow(1.0, 1.0, 1e-13, 0.0);
    CHECK_THROWS_AS(tangent_intersection(slow, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("build_above interpolates the boundary and stays above it") {
    const CurvedThreshold th(1.0, 1.0, 1.0, 0.0);
    const FitWindow win(0.2, 3.0);
    const double t1 = 1.1;
    const auto up = build_above(th, win, t1);
    CHECK(eval_piecewise(up, win.tau0) == doctest::Approx(eval_curved(th, win.tau0)).epsilon(1e-14));
    CHECK(eval_piecewise(up, t1) == doctest::Approx(eval_curved(th, t1)).epsilon(1e-14));
    CHECK(eval_piecewise(up, win.tau_star) ==
          doctest::Approx(eval_curved(th, win.tau_star)).epsilon(1e-14));
    const double probe = 0.5 * (win.tau0 + t1);
    CHECK(eval_piecewise(up, probe) >= eval_curved(th, probe));
    CHECK_THROWS_AS(build_above(th, win, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(build_above(th, win, 3.5), std::invalid_argument);
}

TEST_CASE("build_below is tangent and a global lower bound") {
    const CurvedThreshold th(1.0, 1.0, 1.0, 0.0);
    const auto dn = build_below(th, 0.0, 1.0);
    CHECK(dn.beta1 == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(dn.beta2 == doctest::Approx(-std::exp(-1.0)).epsilon(1e-14));
    CHECK(eval_piecewise(dn, 0.0) == doctest::Approx(eval_curved(th, 0.0)).epsilon(1e-12));
    CHECK(eval_piecewise(dn, 1.0) == doctest::Approx(eval_curved(th, 1.0)).epsilon(1e-12));
    for (int i = 0; i <= 1000; ++i) {
        const double t = 6.0 * i / 1000.0;
        CHECK(eval_piecewise(dn, t) <= eval_curved(th, t) + 1e-12);
    }
}

TEST_CASE("fit_above_below: flat boundary short-circuit") {
    const WienerParams w(1.0, 0.2, 0.0, 0.0);
    const CurvedThreshold flat(1.0, 0.0, 1.0, 0.0);
    const auto win = fit_window(w, flat);
    const auto [up, dn] = fit_above_below(flat, win);
    CHECK(up.objective == 0.0);
    CHECK(dn.objective == 0.0);
    CHECK(up.threshold.alpha1 == 1.0);
    CHECK(up.threshold.beta1 == 0.0);
    CHECK(dn.threshold.beta2 == 0.0);
}

TEST_CASE("fit_above_below sandwich and lattice oracle") {
    const WienerParams w(1.0, 0.2, 0.0, 0.0);
    const CurvedThreshold th(1.0, 1.0, 1.0, 0.0);
    const auto win = fit_window(w, th);
    const auto [up, dn] = fit_above_below(th, win);

    CHECK(up.method == FitMethod::above);
    CHECK(dn.method == FitMethod::below);
    CHECK(up.knots.size() == 1);
    CHECK(dn.knots.size() == 2);
    CHECK(up.objective == dn.objective);

    for (int i = 0; i <= 1000; ++i) {
        const double t = win.tau0 + win.width() * i / 1000.0;
        const double b = eval_curved(th, t);
        CHECK(eval_piecewise(dn.threshold, t) <= b + 1e-12);
        CHECK(eval_piecewise(up.threshold, t) >= b - 1e-12);
    }

    // Brute-force lattice over (t1, tt1, tt2); the simplex optimum must not
    // lose to any lattice point.
    const int n = 50;
    double best = 1e300;
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i) grid[i] = win.tau0 + win.width() * (i + 0.5) / n;
    for (int a = 0; a < n; ++a) {
        const Line2 upper_fixed = chords_above(th, win, grid[a]);
        for (int b = 0; b < n; ++b)
            for (int c = b + 1; c < n; ++c) {
                const Line2 lower = tangents_below(th, grid[b], grid[c]);
                best = std::min(best, area_between(upper_fixed, lower, win.tau0, win.tau_star));
            }
    }
    CHECK(up.objective <= best + 1e-12);
}

TEST_CASE("fit_between stays inside the bounds and beats the midpoint candidate") {
    const WienerParams w(1.0, 0.2, 0.0, 0.0);
    const CurvedThreshold th(1.0, 1.0, 1.0, 0.0);
    const auto win = fit_window(w, th);
    const auto [up, dn] = fit_above_below(th, win);
    const auto betw = fit_between(up, dn, win);

    CHECK(betw.method == FitMethod::between);
    for (int i = 0; i <= 1000; ++i) {
        const double t = win.tau0 + win.width() * i / 1000.0;
        const double y = eval_piecewise(betw.threshold, t);
        CHECK(y >= eval_piecewise(dn.threshold, t) - 1e-12);
        CHECK(y <= eval_piecewise(up.threshold, t) + 1e-12);
    }

    // Naive componentwise midpoint candidate, scored with the same area.
    const auto& u = up.threshold;
    const auto& d = dn.threshold;
    const Line2 cand{0.5 * (u.alpha1 + d.alpha1), 0.5 * (u.beta1 + d.beta1),
                     0.5 * (u.beta2 + d.beta2), 0.5 * (u.t1 + d.t1), 0.0};
    const Line2 upl{u.alpha1, u.beta1, u.beta2, u.t1, u.t0};
    const Line2 dnl{d.alpha1, d.beta1, d.beta2, d.t1, d.t0};
    bool feasible = true;
    for (int i = 0; i <= 1000; ++i) {
        const double t = win.tau0 + win.width() * i / 1000.0;
        if (cand(t) < dnl(t) || cand(t) > upl(t)) feasible = false;
    }
    const double cand_obj = feasible ? area_between(cand, upl, win.tau0, win.tau_star) +
                                           area_between(cand, dnl, win.tau0, win.tau_star)
                                     : 1e10;
    CHECK(betw.objective <= cand_obj + 1e-12);
}

TEST_CASE("fit_between collapses when the bounds coincide") {
    const WienerParams w(1.0, 0.2, 0.0, 0.0);
    const CurvedThreshold flat(2.0, 0.0, 0.5, 0.0);
    const auto win = fit_window(w, flat);
    const auto [up, dn] = fit_above_below(flat, win);
    const auto betw = fit_between(up, dn, win);
    CHECK(betw.objective == 0.0);
    CHECK(betw.threshold.alpha1 == up.threshold.alpha1);
}

TEST_CASE("fit_free: flat boundary is represented exactly") {
    const WienerParams w(1.0, 0.2, 0.0, 0.0);
    const CurvedThreshold flat(1.0, 0.0, 1.0, 0.0);
    const auto win = fit_window(w, flat);
    const auto fr = fit_free(flat, win);
    CHECK(fr.objective == 0.0);
    CHECK(fr.threshold.alpha1 == 1.0);
    CHECK(fr.threshold.beta1 == 0.0);
    CHECK(fr.threshold.beta2 == 0.0);
}

TEST_CASE("fit_free dominates the between fit and the refinement oracle") {
    const WienerParams w(1.0, 0.2, 0.0, 0.0);
    const CurvedThreshold th(1.0, 5.0, 1.0, 0.0);
    const auto win = fit_window(w, th);
    const auto all = fit_all(th, win);

    // Free fit measured against the boundary can only improve on the between
    // threshold's own distance to the boundary (it starts there).
    auto area_to_curve = [&](const PiecewiseLinearThreshold& cand) {
        const Line2 line{cand.alpha1, cand.beta1, cand.beta2, cand.t1, cand.t0};
        std::vector<double> cuts = {win.tau0, win.tau_star};
        if (cand.t1 > win.tau0 && cand.t1 < win.tau_star) cuts.push_back(cand.t1);
        std::sort(cuts.begin(), cuts.end());
        double total = 0.0;
        for (size_t i = 0; i + 1 < cuts.size(); ++i) {
            // composite Simpson; the integrand is smooth within pieces
            const int steps = 512;
            const double h = (cuts[i + 1] - cuts[i]) / steps;
            double sum = 0.0;
            auto f = [&](double t) {
                const double diff = line(t) - eval_curved(th, t);
                return diff * diff;
            };
            for (int s = 0; s < steps; ++s)
                sum += (h / 6.0) *
                       (f(cuts[i] + s * h) + 4.0 * f(cuts[i] + (s + 0.5) * h) +
                        f(cuts[i] + (s + 1) * h));
            total += sum;
        }
        return total;
    };
    CHECK(all.free.objective <= area_to_curve(all.between.threshold) + 1e-9);
    CHECK(all.free.objective == doctest::Approx(area_to_curve(all.free.threshold)).epsilon(1e-6));

    // Coarse 4-D grid + shrinking local refinement around the best cell.
    double best = 1e300;
    std::vector<double> center = {all.between.threshold.alpha1, all.between.threshold.beta1,
                                  all.between.threshold.beta2, all.between.threshold.t1};
    std::vector<double> radius = {1.0, 2.0, 0.5, 0.5 * win.width()};
    for (int round = 0; round < 8; ++round) {
        std::vector<double> arg_best = center;
        const int k = 7;
        for (int i0 = -k / 2; i0 <= k / 2; ++i0)
            for (int i1 = -k / 2; i1 <= k / 2; ++i1)
                for (int i2 = -k / 2; i2 <= k / 2; ++i2)
                    for (int i3 = -k / 2; i3 <= k / 2; ++i3) {
                        const double a1 = center[0] + radius[0] * i0 / (k / 2);
                        const double m1 = center[1] + radius[1] * i1 / (k / 2);
                        const double m2 = center[2] + radius[2] * i2 / (k / 2);
                        const double t1 = center[3] + radius[3] * i3 / (k / 2);
                        if (!(t1 > th.t0)) continue;
                        const double obj =
                            area_to_curve(PiecewiseLinearThreshold(a1, m1, m2, t1, th.t0));
                        if (obj < best) {
                            best = obj;
                            arg_best = {a1, m1, m2, t1};
                        }
                    }
        center = arg_best;
        for (auto& r : radius) r *= 0.35;
    }
    CHECK(all.free.objective <= best + 1e-9);
}

TEST_CASE("fit_free objective is invariant under time translation") {
    const double shift = 5.0;
    const CurvedThreshold th0(1.0, 1.0, 1.0, 0.0), th5(1.0, 1.0, 1.0, shift);
    const WienerParams w0(1.0, 0.2, 0.0, 0.0), w5(1.0, 0.2, 0.0, shift);
    const auto f0 = fit_free(th0, fit_window(w0, th0));
    const auto f5 = fit_free(th5, fit_window(w5, th5));
    CHECK(f5.objective == doctest::Approx(f0.objective).epsilon(1e-9));
    CHECK(f5.threshold.alpha1 == doctest::Approx(f0.threshold.alpha1).epsilon(1e-6));
    CHECK(f5.threshold.t1 - shift == doctest::Approx(f0.threshold.t1).epsilon(1e-6));
}

TEST_CASE("all fitted thresholds are continuous at their knots") {
    const WienerParams w(1.0, 0.2, 0.0, 0.0);
    const CurvedThreshold th(1.0, 1.0, 1.0, 0.0);
    const auto win = fit_window(w, th);
    const auto all = fit_all(th, win);
    for (const auto* fit : {&all.above, &all.below, &all.between, &all.free}) {
        const auto& d = fit->threshold;
        const double left = d.alpha1 + d.beta1 * (d.t1 - d.t0);
        CHECK(d.alpha2() == left);
    }
}

TEST_CASE("squared-distance area vanishes only on coincident thresholds") {
    const WienerParams w(1.0, 0.2, 0.0, 0.0);
    const CurvedThreshold th(1.0, 1.0, 1.0, 0.0);
    const auto win = fit_window(w, th);
    const auto [up, dn] = fit_above_below(th, win);
    CHECK(up.objective > 0.0);
    const auto betw = fit_between(up, up, win);
    CHECK(betw.objective == 0.0);
}

TEST_CASE("fit_threshold dispatch matches the direct calls") {
    const WienerParams w(1.0, 0.2, 0.0, 0.0);
    const CurvedThreshold th(1.0, 1.0, 1.0, 0.0);
    const auto win = fit_window(w, th);
    const auto fr = fit_threshold(th, win, FitMethod::free);
    CHECK(fr.method == FitMethod::free);
    CHECK(to_string(FitMethod::between) == std::string("between"));
    CHECK(fit_method_from_string("above") == FitMethod::above);
    CHECK_THROWS_AS(fit_method_from_string("chord"), std::invalid_argument);
}
