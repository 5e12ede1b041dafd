#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fpt/fpt_law.hpp"
#include "fpt/threshold_fit.hpp"
#include "support/reference.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

using namespace fpt;

namespace {

// Test-local Euler-Maruyama simulator with bridge correction, independent of
// the production simulator module, used as the Monte Carlo route against the
// analytic two-piece law.
std::vector<double> simulate_to_piecewise(const WienerParams& w,
                                          const PiecewiseLinearThreshold& thr, int n_paths,
                                          double dt, double t_max, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double vol = std::sqrt(w.sigma2 * dt);
    std::vector<double> times;
    times.reserve(n_paths);
    for (int p = 0; p < n_paths; ++p) {
        double x = w.x0;
        double t = w.t0;
        while (t < t_max) {
            const double t_next = t + dt;
            const double b_next = eval_piecewise(thr, t_next);
            const double x_next = x + w.mu * dt + vol * gauss(rng);
            if (x_next >= b_next) {
                times.push_back(t_next);
                break;
            }
            const double q = 2.0 * (b_next - x) * (b_next - x_next) / (w.sigma2 * dt);
            if (q < 745.0 && std::exp(-q) > unif(rng)) {
                times.push_back(t + 0.5 * dt);
                break;
            }
            x = x_next;
            t = t_next;
        }
    }
    return times;
}

const WienerParams kW(1.0, 0.2, 0.0, 0.0);
const PiecewiseLinearThreshold kThr(2.0, -1.0, -0.2, 1.0, 0.0);

}  // namespace

TEST_CASE("linear_fpt_pdf pinned values and the inverse Gaussian mapping") {
    const WienerParams w(1.0, 1.0, 0.0, 0.0);
    CHECK(linear_fpt_pdf(w, 1.0, 0.0, 1.0) ==
          doctest::Approx(0.398942280401432678).epsilon(1e-13));
    CHECK(linear_fpt_pdf(w, 1.0, 0.0, 0.0) == 0.0);
    CHECK(linear_fpt_pdf(w, 1.0, 0.0, -1.0) == 0.0);
    CHECK_THROWS_AS(linear_fpt_pdf(w, -1.0, 0.0, 1.0), std::domain_error);

    // slope -1 maps onto IG((alpha-x0)/(mu-beta), (alpha-x0)^2/sigma2)
    const WienerParams w2(1.0, 0.2, 0.0, 0.0);
    CHECK(linear_fpt_pdf(w2, 1.0, -1.0, 0.5) ==
          doctest::Approx(numerics::ig_pdf(0.5, 0.5, 5.0)).epsilon(1e-13));
}

TEST_CASE("linear_fpt_pdf admits defective laws when mu <= beta") {
    const WienerParams w(1.0, 0.5, 0.0, 0.0);
    const double mass = numerics::integrate(
        [&](double t) { return linear_fpt_pdf(w, 1.0, 2.0, t); }, 0.0, 400.0,
        {1e-10, 1e-8, 4000});
    CHECK(mass < 0.9);
    CHECK(mass > 0.0);
}

TEST_CASE("constrained_transition_density absorbing boundary and Gaussian limit") {
    const WienerParams w(1.0, 1.0, 0.0, 0.0);
    const PiecewiseLinearThreshold flat(2.0, 0.0, 0.0, 1.0, 0.0);
    using P = std::pair<double, double>;

    // level exactly on the threshold: the image factor kills the density
    const P on_boundary[] = {{1.0, 2.0}};
    CHECK(constrained_transition_density(w, flat, on_boundary) == 0.0);
    const P above[] = {{1.0, 2.5}};
    CHECK_THROWS_AS(constrained_transition_density(w, flat, above), std::domain_error);

    // threshold far above the path: plain Gaussian transition density
    const PiecewiseLinearThreshold far(20.0, 0.0, 0.0, 1.0, 0.0);
    const P mid[] = {{1.0, 1.0}};
    const double got = constrained_transition_density(w, far, mid);
    const double gaussian = std::exp(-0.5 * (1.0 - 1.0) * (1.0 - 1.0)) / std::sqrt(2.0 * M_PI);
    CHECK(got == doctest::Approx(gaussian).epsilon(1e-12));
}

TEST_CASE("constrained_transition_density matches the frozen Monte Carlo pin") {
    const WienerParams w(1.0, 1.0, 0.0, 0.0);
    const PiecewiseLinearThreshold flat(2.0, 0.0, 0.0, 1.0, 0.0);
    const std::pair<double, double> pts[] = {{1.0, 1.0}};
    const double got = constrained_transition_density(w, flat, pts);
    // analytic long-double route
    CHECK(got == doctest::Approx(0.391635397656151902).epsilon(1e-13));
    // bridge-corrected Euler histogram, 1e6 paths, dt = 1e-3, bin 0.01:
    // density 0.3993, binomial se 6.306e-3 (recorded once; seed 20240817)
    CHECK(std::fabs(got - 0.3993) < 3.0 * 6.306e-3);
}

TEST_CASE("constrained_transition_density two-point factorization") {
    using P = std::pair<double, double>;
    const P pts[] = {{1.0, 1.0}, {1.7, 0.5}};
    const double got = constrained_transition_density(kW, kThr, pts);
    const long double leg1 =
        testref::constrained_kernel(1.0L, 0.2L, 0.0L, 0.0L, 2.0L, -1.0L, 1.0L, 1.0L);
    // second leg restarts at (1.0, 1.0) under the second line alpha2 = 1, slope -0.2
    const long double leg2 =
        testref::constrained_kernel(1.0L, 0.2L, 1.0L, 1.0L, 1.0L, -0.2L, 0.5L, 1.7L);
    CHECK(got == doctest::Approx(static_cast<double>(leg1 * leg2)).epsilon(1e-12));

    const P bad_order[] = {{1.7, 0.5}, {1.0, 1.0}};
    CHECK_THROWS_AS(constrained_transition_density(kW, kThr, bad_order), std::invalid_argument);
}

TEST_CASE("piecewise_fpt_pdf equals the linear law before the knot") {
    for (double t : {0.1, 0.4, 0.7, 1.0})
        CHECK(piecewise_fpt_pdf(kW, kThr, t) ==
              doctest::Approx(linear_fpt_pdf(kW, kThr.alpha1, kThr.beta1, t)).epsilon(1e-13));
    CHECK(piecewise_fpt_pdf(kW, kThr, 0.0) == 0.0);
    CHECK_THROWS_AS(piecewise_fpt_pdf(WienerParams(1.0, 0.2, 3.0, 0.0), kThr, 0.5),
                    std::domain_error);
}

TEST_CASE("piecewise_fpt_pdf degenerates to the linear law for equal slopes") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int draw = 0; draw < 20; ++draw) {
        const double mu = 0.5 + u(rng);
        const double s2 = 0.1 + u(rng);
        const double alpha = 0.5 + 2.0 * u(rng);
        const double beta = -u(rng) * 0.8;
        const double t1 = 0.2 + 2.0 * u(rng);
        const WienerParams w(mu, s2, 0.0, 0.0);
        const PiecewiseLinearThreshold two(alpha, beta, beta, t1, 0.0);
        double sup = 0.0;
        for (int i = 1; i <= 10000; ++i) {
            const double t = 6.0 * i / 10000.0;
            sup = std::max(sup, std::fabs(piecewise_fpt_pdf(w, two, t) -
                                          linear_fpt_pdf(w, alpha, beta, t)));
        }
        CHECK(sup < 1e-10);
    }
}

TEST_CASE("piecewise_fpt_pdf matches the renewal-integral oracle past the knot") {
    // frozen long-double oracle values at t = 1.5 and t = 2.0
    CHECK(piecewise_fpt_pdf(kW, kThr, 1.5) ==
          doctest::Approx(0.323616712688526136).epsilon(1e-10));
    CHECK(piecewise_fpt_pdf(kW, kThr, 2.0) ==
          doctest::Approx(0.062830433063096725).epsilon(1e-10));
    // and a live rerun of the oracle on a sparser grid of times
    for (double t : {1.05, 1.2, 1.8, 2.5, 3.0}) {
        const long double oracle = testref::piecewise_fpt_pdf_renewal(
            1.0L, 0.2L, 0.0L, 0.0L, 2.0L, -1.0L, -0.2L, 1.0L, t, 1 << 15);
        CHECK(piecewise_fpt_pdf(kW, kThr, t) ==
              doctest::Approx(static_cast<double>(oracle)).epsilon(1e-9));
    }
}

TEST_CASE("piecewise_fpt_pdf is continuous through the knot") {
    // the right limit is approached with a sqrt(t - t1) cusp, so the probe
    // distance sets the attainable agreement
    const double left = piecewise_fpt_pdf(kW, kThr, 1.0 - 1e-12);
    const double right = piecewise_fpt_pdf(kW, kThr, 1.0 + 1e-12);
    CHECK(left == doctest::Approx(right).epsilon(1e-5));
}

TEST_CASE("piecewise_fpt_pdf stays finite and nonnegative on random draws") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int draw = 0; draw < 10; ++draw) {
        const WienerParams w(0.5 + u(rng), 0.1 + u(rng), 0.0, 0.0);
        const PiecewiseLinearThreshold thr(0.5 + 2.0 * u(rng), -1.5 * u(rng), -0.8 * u(rng),
                                           0.2 + 2.0 * u(rng), 0.0);
        for (int i = 0; i <= 2000; ++i) {
            const double t = 8.0 * i / 2000.0;
            const double f = piecewise_fpt_pdf(w, thr, t);
            CHECK(std::isfinite(f));
            CHECK(f >= 0.0);
        }
    }
}

TEST_CASE("piecewise_fpt_cdf endpoints, monotonicity, ig consistency") {
    CHECK(piecewise_fpt_cdf(kW, kThr, 0.0) == 0.0);
    CHECK(piecewise_fpt_cdf(kW, kThr, -1.0) == 0.0);
    double prev = 0.0;
    for (int i = 1; i <= 40; ++i) {
        const double t = 0.2 * i;
        const double F = piecewise_fpt_cdf(kW, kThr, t);
        CHECK(F >= prev - 1e-9);
        prev = F;
    }
    CHECK(piecewise_fpt_cdf(kW, kThr, 12.0) == doctest::Approx(1.0).epsilon(1e-4));
    // before the knot the law is the inverse Gaussian of the first piece
    for (double t : {0.3, 0.6, 0.9})
        CHECK(piecewise_fpt_cdf(kW, kThr, t) ==
              doctest::Approx(numerics::ig_cdf(t, 1.0, 20.0)).epsilon(1e-6));
}

TEST_CASE("piecewise_fpt_cdf derivative recovers the density away from the knot") {
    for (double t : {0.5, 0.8, 1.4, 2.2}) {
        const double h = 1e-4;
        const double deriv =
            (piecewise_fpt_cdf(kW, kThr, t + h) - piecewise_fpt_cdf(kW, kThr, t - h)) / (2.0 * h);
        CHECK(std::fabs(deriv - piecewise_fpt_pdf(kW, kThr, t)) < 1e-5);
    }
}

TEST_CASE("piecewise law against a bridge-corrected Monte Carlo sample") {
    const int n = 100000;
    const auto times = simulate_to_piecewise(kW, kThr, n, 1e-3, 25.0, 424242);
    REQUIRE(static_cast<int>(times.size()) == n);

    // cdf mid-values within a 3-sigma binomial band
    std::vector<double> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    for (double t : {0.8, 1.2, 1.6, 2.2}) {
        const double emp = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) -
                                               sorted.begin()) /
                           n;
        const double model = piecewise_fpt_cdf(kW, kThr, t);
        const double band = 3.0 * std::sqrt(std::max(model * (1.0 - model), 1e-12) / n);
        CHECK(std::fabs(model - emp) < band + 1e-3);  // 1e-3 covers the dt bias
    }

    // moments within 3 standard errors of the sample mean
    double mean = 0.0;
    for (double t : times) mean += t;
    mean /= n;
    double ss = 0.0;
    for (double t : times) ss += (t - mean) * (t - mean);
    const double se = std::sqrt(ss / (n - 1.0) / n);
    const auto mom = fpt_moments(kW, kThr);
    CHECK(std::fabs(mom.mean - mean) < 3.0 * se + 1e-3);
    CHECK(mom.total_mass == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(mom.variance == doctest::Approx(mom.second_moment - mom.mean * mom.mean).epsilon(1e-9));
    CHECK(mom.cv == doctest::Approx(std::sqrt(mom.variance) / mom.mean).epsilon(1e-12));
}

TEST_CASE("fpt_moments closed forms for degenerate thresholds") {
    // constant threshold: IG(1, 5) has mean 1, variance 0.2
    const PiecewiseLinearThreshold flat(1.0, 0.0, 0.0, 1.0, 0.0);
    const auto m = fpt_moments(kW, flat);
    CHECK(m.mean == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(m.variance == doctest::Approx(0.2).epsilon(1e-5));
    CHECK(m.cv == doctest::Approx(std::sqrt(0.2)).epsilon(1e-5));
    CHECK(m.total_mass == doctest::Approx(1.0).epsilon(1e-6));

    // single line with slope beta: mean (alpha1 - x0)/(mu - beta)
    const PiecewiseLinearThreshold line(1.5, -0.5, -0.5, 1.0, 0.0);
    CHECK(fpt_moments(kW, line).mean == doctest::Approx(1.0).epsilon(1e-6));

    CHECK_THROWS_AS(fpt_moments(kW, PiecewiseLinearThreshold(1.0, 0.0, 2.0, 1.0, 0.0)),
                    std::domain_error);
}

TEST_CASE("fpt_horizon captures all but a vanishing tail") {
    const double hor = fpt_horizon(kW, kThr, 1e-10);
    CHECK(piecewise_fpt_cdf(kW, kThr, hor) > 1.0 - 1e-6);
}

TEST_CASE("small_eps statistics: pinned values and limits") {
    const WienerParams w(1.0, 0.2, 0.0, 0.0);
    const CurvedThreshold th(1.0, 0.05, 1.0, 0.0);
    CHECK(small_eps_mean(w, th) == doctest::Approx(1.020004219420515927).epsilon(1e-13));
    CHECK(small_eps_var(w, th) == doctest::Approx(0.197805707354615043).epsilon(1e-12));

    const CurvedThreshold none(1.0, 0.0, 1.0, 0.0);
    CHECK(small_eps_mean(w, none) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(small_eps_var(w, none) == doctest::Approx(0.2).epsilon(1e-15));

    const CurvedThreshold fast(1.0, 0.05, 1e8, 0.0);
    CHECK(small_eps_mean(w, fast) == doctest::Approx(1.0).epsilon(1e-9));

    // configurable reference level enters the third term linearly
    CHECK(small_eps_var(w, th, 0.0) != small_eps_var(w, th));
}

TEST_CASE("stochastic ordering of the bound thresholds") {
    const WienerParams w(1.0, 0.2, 0.0, 0.0);
    const CurvedThreshold th(1.0, 1.0, 1.0, 0.0);
    const auto win = fit_window(w, th);
    const auto [up, dn] = fit_above_below(th, win);
    for (int i = 0; i <= 50; ++i) {
        const double t = win.tau0 + win.width() * i / 50.0;
        CHECK(piecewise_fpt_cdf(w, up.threshold, t) <=
              piecewise_fpt_cdf(w, dn.threshold, t) + 1e-9);
    }
}

TEST_CASE("small-amplitude agreement of the fitted mean") {
    const WienerParams w(1.0, 0.2, 0.0, 0.0);
    const CurvedThreshold th(1.0, 0.05, 1.0, 0.0);
    const auto fr = fit_free(th, fit_window(w, th));
    const double mean_fit = fpt_moments(w, fr.threshold).mean;
    const double mean_eps = small_eps_mean(w, th);
    CHECK(std::fabs(mean_fit - mean_eps) / mean_fit < 0.01);
}
