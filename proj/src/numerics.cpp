#include "fpt/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fpt::numerics {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kLog2Pi = 1.83787706640934548356;

void check_tolerance(const Tolerance& tol) {
    if (!(tol.abs_tol > 0.0) || !(tol.rel_tol > 0.0) || tol.max_iter < 1)
        throw std::invalid_argument("Tolerance: abs_tol and rel_tol must be positive, max_iter >= 1");
}

}  // namespace

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / kSqrt2);
}

double log_normal_cdf(double z) {
    if (z > -20.0) return std::log(normal_cdf(z));
    // Mills-ratio asymptotic expansion for the deep lower tail.
    const double z2 = z * z;
    const double series =
        1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2) + 105.0 / (z2 * z2 * z2 * z2);
    return -0.5 * z2 - 0.5 * kLog2Pi - std::log(-z) + std::log(series);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("normal_quantile: p must lie in (0,1)");

    // Wichura's algorithm AS241 (PPND16), accurate to ~1 ulp over (0,1).
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
            (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                  6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
              1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
            (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                  3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
              4.2313330701600911252e+1) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                      2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                    3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
                  4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                    6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
                  2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                    2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
                  5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                    1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                  5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -value : value;
}

namespace {

void check_ig_params(double mean, double shape, const char* who) {
    if (!(mean > 0.0) || !(shape > 0.0))
        throw std::invalid_argument(std::string(who) + ": mean and shape must be positive");
}

}  // namespace

double ig_pdf(double t, double mean, double shape) {
    check_ig_params(mean, shape, "ig_pdf");
    if (!(t > 0.0)) return 0.0;
    const double d = t - mean;
    return std::sqrt(shape / (2.0 * M_PI * t * t * t)) *
           std::exp(-shape * d * d / (2.0 * mean * mean * t));
}

double ig_cdf(double t, double mean, double shape) {
    check_ig_params(mean, shape, "ig_cdf");
    if (!(t > 0.0)) return 0.0;
    if (std::isinf(t)) return 1.0;
    const double r = std::sqrt(shape / t);
    const double first = normal_cdf(r * (t / mean - 1.0));
    const double tail_arg = -r * (t / mean + 1.0);
    const double expo = 2.0 * shape / mean;
    const double second = (expo > 700.0)
        ? std::exp(expo + log_normal_cdf(tail_arg))
        : std::exp(expo) * normal_cdf(tail_arg);
    return std::min(first + second, 1.0);
}

double ig_quantile(double p, double mean, double shape, const Tolerance& tol) {
    check_ig_params(mean, shape, "ig_quantile");
    check_tolerance(tol);
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("ig_quantile: p must lie in (0,1)");

    double lo = 0.0;
    double hi = mean;
    for (int i = 0; ig_cdf(hi, mean, shape) < p; ++i) {
        if (i > 1100) throw std::runtime_error("ig_quantile: failed to bracket the quantile");
        hi *= 2.0;
    }
    for (int i = 0; i < tol.max_iter; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double f = ig_cdf(mid, mean, shape);
        if (std::fabs(f - p) <= tol.abs_tol) return mid;
        if (f < p) lo = mid; else hi = mid;
    }
    throw std::runtime_error("ig_quantile: bisection did not converge");
}

namespace {

// Standard (G7, K15) node/weight pairs on [0, 1] in the node's magnitude.
constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct PanelEstimate {
    double value;
    double error;
};

PanelEstimate gauss_kronrod_15(const std::function<double(double)>& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = kWgk[7] * fc;
    double gauss = kWg[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kXgk[i];
        const double sum = f(center - dx) + f(center + dx);
        kronrod += kWgk[i] * sum;
        if (i % 2 == 1) gauss += kWg[i / 2] * sum;
    }
    kronrod *= half;
    gauss *= half;
    const double diff = std::fabs(kronrod - gauss);
    return {kronrod, std::min(diff, std::pow(200.0 * diff, 1.5))};
}

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 const Tolerance& tol, std::span<const double> breakpoints) {
    check_tolerance(tol);
    if (!(a < b)) throw std::invalid_argument("integrate: requires a < b");
    if (!std::isfinite(a) || !std::isfinite(b))
        throw std::invalid_argument("integrate: endpoints must be finite");

    std::vector<double> edges;
    edges.push_back(a);
    for (double bp : breakpoints)
        if (bp > a && bp < b) edges.push_back(bp);
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    std::vector<Panel> heap;
    double total = 0.0, total_error = 0.0;
    for (size_t i = 0; i + 1 < edges.size(); ++i) {
        const auto est = gauss_kronrod_15(f, edges[i], edges[i + 1]);
        heap.push_back({edges[i], edges[i + 1], est.value, est.error});
        total += est.value;
        total_error += est.error;
    }
    std::make_heap(heap.begin(), heap.end());

    int panels = static_cast<int>(heap.size());
    while (total_error > std::max(tol.abs_tol, tol.rel_tol * std::fabs(total))) {
        if (panels >= tol.max_iter)
            throw std::runtime_error("integrate: error target not reached within panel budget");
        std::pop_heap(heap.begin(), heap.end());
        const Panel worst = heap.back();
        heap.pop_back();
        if (worst.b - worst.a <= std::fabs(worst.a) * 4.0 * std::numeric_limits<double>::epsilon()) {
            // Interval exhausted at machine resolution; accept its estimate.
            total_error -= worst.error;
            heap.push_back({worst.a, worst.b, worst.value, 0.0});
            std::push_heap(heap.begin(), heap.end());
            continue;
        }
        const double mid = 0.5 * (worst.a + worst.b);
        const auto left = gauss_kronrod_15(f, worst.a, mid);
        const auto right = gauss_kronrod_15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push_back({worst.a, mid, left.value, left.error});
        std::push_heap(heap.begin(), heap.end());
        heap.push_back({mid, worst.b, right.value, right.error});
        std::push_heap(heap.begin(), heap.end());
        ++panels;
    }
    return total;
}

double find_root(const std::function<double(double)>& f, Bracket bracket, const Tolerance& tol) {
    check_tolerance(tol);
    double lo = bracket.lo, hi = bracket.hi;
    if (!(lo < hi)) throw std::invalid_argument("find_root: bracket requires lo < hi");
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0)
        throw std::invalid_argument("find_root: no sign change over the bracket");

    for (int i = 0; i < tol.max_iter; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if (fm * flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo <= tol.abs_tol + tol.rel_tol * std::fabs(mid)) return 0.5 * (lo + hi);
    }
    throw std::runtime_error("find_root: bisection did not converge");
}

namespace {

double simplex_diameter(const std::vector<std::vector<double>>& verts) {
    double diam = 0.0;
    for (size_t j = 1; j < verts.size(); ++j)
        for (size_t i = 0; i < verts[0].size(); ++i)
            diam = std::max(diam, std::fabs(verts[j][i] - verts[0][i]));
    return diam;
}

}  // namespace

MinimizeResult minimize(const std::function<double(const std::vector<double>&)>& objective,
                        const std::vector<double>& initial, const Tolerance& tol) {
    check_tolerance(tol);
    const size_t n = initial.size();
    if (n == 0) throw std::invalid_argument("minimize: empty initial point");
    const double f_init = objective(initial);
    if (!std::isfinite(f_init))
        throw std::invalid_argument("minimize: objective must be finite at the initial point");

    constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;

    std::vector<double> best = initial;
    double f_best = f_init;
    int iterations = 0;
    bool converged = false;

    for (int round = 0; round < 3; ++round) {
        bool round_converged = false;
        // Fresh simplex around the incumbent best point.
        std::vector<std::vector<double>> verts(n + 1, best);
        std::vector<double> fv(n + 1);
        for (size_t i = 0; i < n; ++i)
            verts[i + 1][i] += (best[i] != 0.0) ? 0.05 * std::fabs(best[i]) : 0.00025;
        for (size_t j = 0; j <= n; ++j) fv[j] = objective(verts[j]);

        for (int it = 0; it < tol.max_iter; ++it) {
            ++iterations;
            // Order vertices by objective value.
            std::vector<size_t> idx(n + 1);
            for (size_t j = 0; j <= n; ++j) idx[j] = j;
            std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return fv[a] < fv[b]; });
            std::vector<std::vector<double>> vs(n + 1);
            std::vector<double> fs(n + 1);
            for (size_t j = 0; j <= n; ++j) {
                vs[j] = verts[idx[j]];
                fs[j] = fv[idx[j]];
            }
            verts.swap(vs);
            fv.swap(fs);

            if (simplex_diameter(verts) < tol.abs_tol) {
                round_converged = true;
                break;
            }

            std::vector<double> centroid(n, 0.0);
            for (size_t j = 0; j < n; ++j)
                for (size_t i = 0; i < n; ++i) centroid[i] += verts[j][i] / double(n);

            auto affine = [&](double coeff) {
                std::vector<double> p(n);
                for (size_t i = 0; i < n; ++i)
                    p[i] = centroid[i] + coeff * (centroid[i] - verts[n][i]);
                return p;
            };

            const auto reflected = affine(kReflect);
            const double fr = objective(reflected);
            if (fr < fv[0]) {
                const auto expanded = affine(kExpand);
                const double fe = objective(expanded);
                if (fe < fr) {
                    verts[n] = expanded;
                    fv[n] = fe;
                } else {
                    verts[n] = reflected;
                    fv[n] = fr;
                }
            } else if (fr < fv[n - 1]) {
                verts[n] = reflected;
                fv[n] = fr;
            } else {
                const bool outside = fr < fv[n];
                const auto contracted = outside ? affine(kContract) : affine(-kContract);
                const double fc = objective(contracted);
                if (fc < (outside ? fr : fv[n])) {
                    verts[n] = contracted;
                    fv[n] = fc;
                } else {
                    for (size_t j = 1; j <= n; ++j) {
                        for (size_t i = 0; i < n; ++i)
                            verts[j][i] = verts[0][i] + kShrink * (verts[j][i] - verts[0][i]);
                        fv[j] = objective(verts[j]);
                    }
                }
            }
        }

        for (size_t j = 0; j <= n; ++j) {
            if (fv[j] < f_best) {
                f_best = fv[j];
                best = verts[j];
            }
        }
        converged = round_converged;
    }

    return {best, f_best, iterations, converged};
}

}  // namespace fpt::numerics
