#pragma once

// Piecewise-linear approximations of the curved boundary over the fit window:
// chords from above, tangents from below, a compromise line between the two,
// and an unconstrained least-area fit. Each fit minimizes a squared-distance
// area with a simplex search; parameter values breaking a method's conditions
// are penalized with 1e10.

#include "fpt/thresholds.hpp"

#include <string>
#include <utility>
#include <vector>

namespace fpt {

enum class FitMethod { above, below, between, free };

const char* to_string(FitMethod m);
FitMethod fit_method_from_string(const std::string& name);

struct FitResult {
    PiecewiseLinearThreshold threshold;
    double objective;            // achieved squared-distance area
    FitMethod method;
    std::vector<double> knots;   // t1 for above; tt1, tt2 for below; empty otherwise
};

/// Time at which the tangents to the boundary at tt1 and tt2 intersect.
/// Strictly inside (tt1, tt2) because the boundary is strictly convex.
double tangent_intersection(const CurvedThreshold& th, double tt1, double tt2);

/// Chord threshold through (tau0, b(tau0)), (t1, b(t1)), (tau_star,
/// b(tau_star)); the first chord is extended back to t0 to define alpha1.
/// Lies above the boundary on the window by convexity.
PiecewiseLinearThreshold build_above(const CurvedThreshold& th, const FitWindow& win, double t1);

/// Two tangent lines touching the boundary at tt1 and tt2, joined at their
/// intersection. A global lower bound for the convex boundary.
PiecewiseLinearThreshold build_below(const CurvedThreshold& th, double tt1, double tt2);

/// Jointly picks the chord knot and the two tangency points minimizing the
/// squared-distance area between the upper and lower thresholds.
std::pair<FitResult, FitResult> fit_above_below(const CurvedThreshold& th, const FitWindow& win);

/// Compromise threshold minimizing the summed squared-distance area to the
/// upper and lower fits, constrained to lie between them on the window grid.
FitResult fit_between(const FitResult& above, const FitResult& below, const FitWindow& win);

/// Unconstrained least-squared-area fit to the curved boundary itself.
FitResult fit_free(const CurvedThreshold& th, const FitWindow& win);

struct FitAll {
    FitResult above;
    FitResult below;
    FitResult between;
    FitResult free;
};

/// Runs the full chain (above/below -> between -> free) once.
FitAll fit_all(const CurvedThreshold& th, const FitWindow& win);

/// Single-method convenience dispatcher.
FitResult fit_threshold(const CurvedThreshold& th, const FitWindow& win, FitMethod method);

}  // namespace fpt
