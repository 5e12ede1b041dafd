#pragma once

// Experiment runner: sweeps the (sigma2, eps, lambda) grid, simulating
// samples, fitting thresholds and scoring statistics, estimators and cdf
// errors. Cells run concurrently but rows always come out in cell order and
// per-cell seeds derive deterministically from (seed, cell, repetition), so
// re-running a config reproduces the CSVs byte for byte.

#include "fpt/inference.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace fpt {

struct ExperimentConfig {
    // model
    double mu = 1.0;
    std::vector<double> sigma2 = {0.2, 0.4, 1.0};
    double x0 = 0.0;
    double t0 = 0.0;
    // threshold
    double b0 = 1.0;
    std::vector<double> eps = {0.05, 0.1, 0.2, 1.0, 5.0, 10.0};
    std::vector<double> lambda = {0.02, 0.04, 0.08, 0.15, 0.30,
                                  0.60, 1.00, 3.00, 5.00, 10.00};
    // sim
    double dt = 1e-3;
    std::int64_t n_paths = 100000;  // statistics / riae grids
    int repetitions = 200;          // estimation grid
    std::int64_t n_obs = 100;       // observations per estimation repetition
    std::uint64_t seed = 20240817;
    // fit
    FitMethod fit_method = FitMethod::free;
    double window_p_low = 0.005;
    double window_p_high = 0.995;
    // output
    std::string output_dir = ".";

    void validate() const;
};

/// Reads a config from .toml or .json (chosen by extension).
ExperimentConfig load_experiment_config(const std::string& path);

struct StatisticsRow {
    double sigma2 = 0, eps = 0, lambda = 0;
    double mean_th = 0, var_th = 0, cv_th = 0, total_mass = 0;
    double mean_small_eps = 0, var_small_eps = 0, cv_small_eps = 0;
    double mean_emp = 0, var_emp = 0, cv_emp = 0;
    std::string error;
};

struct EstimationRow {
    double sigma2 = 0, eps = 0, lambda = 0;
    std::string method;
    double r_me_mu = 0, r_mse_mu = 0, r_me_sigma2 = 0, r_mse_sigma2 = 0;
    std::string error;
};

struct RiaeRow {
    double sigma2 = 0, eps = 0, lambda = 0;
    double riae_free = 0, riae_above = 0, riae_below = 0, riae_between = 0;
    std::string error;
};

struct StatisticsTable { std::vector<StatisticsRow> rows; int failed = 0; };
struct EstimationTable { std::vector<EstimationRow> rows; int failed = 0; };
struct RiaeTable { std::vector<RiaeRow> rows; int failed = 0; };

/// One row per grid cell: theoretical moments under the fitted threshold,
/// the small-amplitude approximations, and empirical moments from n_paths
/// simulated passages. Failed cells carry the message in `error`.
StatisticsTable run_statistics_grid(const ExperimentConfig& cfg);

/// Estimator hook for tests; when set it replaces the built-in estimators.
using EstimatorOverride = std::function<PhiEstimate(
    EstimMethod, const FptSample&, const WienerParams& truth,
    const PiecewiseLinearThreshold& fitted, const CurvedThreshold& curved)>;

/// One row per (cell, method): relative mean and mean-square errors of the
/// estimates over `repetitions` samples of n_obs observations.
EstimationTable run_estimation_grid(const ExperimentConfig& cfg,
                                    const EstimatorOverride& override_estimator = nullptr);

/// One row per cell: relative integrated absolute cdf error of the four
/// fitted thresholds against one n_paths empirical cdf.
RiaeTable run_riae_grid(const ExperimentConfig& cfg);

void write_csv(std::ostream& os, const StatisticsTable& table);
void write_csv(std::ostream& os, const EstimationTable& table);
void write_csv(std::ostream& os, const RiaeTable& table);

}  // namespace fpt
