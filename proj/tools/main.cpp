// Command-line front end: threshold fitting, density/moment evaluation,
// Monte Carlo sample generation, parameter estimation and full experiment
// grids. Exit codes: 0 success, 2 invalid flags or config, 3 numerical
// failure.

#include "fpt/experiments.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

constexpr int kExitBadArgs = 2;
constexpr int kExitNumerical = 3;

struct ModelFlags {
    double b0 = 1.0;
    double eps = 1.0;
    double lambda = 1.0;
    double mu = 1.0;
    double sigma2 = 0.2;
    double x0 = 0.0;
    double t0 = 0.0;
    std::string method = "free";
    double window_p_low = 0.005;
    double window_p_high = 0.995;
};

void add_model_flags(CLI::App* cmd, ModelFlags& flags, bool with_process = true,
                     bool with_fit = true) {
    cmd->add_option("--b0", flags.b0, "Asymptotic threshold level");
    cmd->add_option("--eps", flags.eps, "Threshold amplitude (>= 0)");
    cmd->add_option("--lambda", flags.lambda, "Threshold decay rate");
    if (with_process) {
        cmd->add_option("--mu", flags.mu, "Process drift (> 0)");
        cmd->add_option("--sigma2", flags.sigma2, "Process diffusion coefficient (> 0)");
    }
    cmd->add_option("--x0", flags.x0, "Process start level");
    cmd->add_option("--t0", flags.t0, "Process start time");
    if (with_fit)
        cmd->add_option("--method", flags.method, "Threshold fit method: free|above|below|between")
            ->check(CLI::IsMember({"free", "above", "below", "between"}));
    cmd->add_option("--win-p-low", flags.window_p_low, "Lower window probability");
    cmd->add_option("--win-p-high", flags.window_p_high, "Upper window probability");
}

struct FittedModel {
    fpt::WienerParams w;
    fpt::CurvedThreshold th;
    fpt::FitWindow win;
    fpt::FitResult fit;
};

FittedModel fit_from_flags(const ModelFlags& f) {
    const fpt::WienerParams w(f.mu, f.sigma2, f.x0, f.t0);
    const fpt::CurvedThreshold th(f.b0, f.eps, f.lambda, f.t0);
    const auto win = fpt::fit_window(w, th, f.window_p_low, f.window_p_high);
    const auto fit = fpt::fit_threshold(th, win, fpt::fit_method_from_string(f.method));
    return {w, th, win, fit};
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream os(out_path);
    if (!os) throw std::invalid_argument("cannot open output file: " + out_path);
    os << text;
}

int run(int argc, char** argv) {
    CLI::App app{"First-passage-time toolkit for a Wiener process with decaying threshold"};
    app.require_subcommand(1);

    // fit
    ModelFlags fit_flags;
    auto* cmd_fit = app.add_subcommand("fit", "Fit a two-piece linear threshold");
    add_model_flags(cmd_fit, fit_flags);

    // density
    ModelFlags dens_flags;
    double t_min = 0.0, t_max_grid = 5.0;
    int t_steps = 200;
    std::string dens_out;
    auto* cmd_density = app.add_subcommand("density", "Tabulate pdf and cdf of the fitted law");
    add_model_flags(cmd_density, dens_flags);
    cmd_density->add_option("--t-min", t_min, "Grid start time")->required();
    cmd_density->add_option("--t-max", t_max_grid, "Grid end time")->required();
    cmd_density->add_option("--t-steps", t_steps, "Number of grid points")->required();
    cmd_density->add_option("--out", dens_out, "Output CSV path (stdout when omitted)");

    // moments
    ModelFlags mom_flags;
    auto* cmd_moments = app.add_subcommand("moments", "Passage-time moments of the fitted law");
    add_model_flags(cmd_moments, mom_flags);

    // simulate
    ModelFlags sim_flags;
    std::int64_t sim_n = 100;
    double sim_dt = 1e-3;
    std::uint64_t sim_seed = 1;
    double sim_t_max = 0.0;
    std::string sim_out;
    auto* cmd_simulate = app.add_subcommand("simulate", "Monte Carlo passage-time sample");
    add_model_flags(cmd_simulate, sim_flags, true, false);
    cmd_simulate->add_option("--n", sim_n, "Number of paths")->required();
    cmd_simulate->add_option("--dt", sim_dt, "Euler time step");
    cmd_simulate->add_option("--seed", sim_seed, "RNG seed")->required();
    cmd_simulate->add_option("--t-max", sim_t_max, "Censoring time (default 1e6*dt past t0)");
    cmd_simulate->add_option("--out", sim_out, "Output CSV path (stdout when omitted)");

    // estimate
    ModelFlags est_flags;
    std::string est_input, est_method = "mle";
    double truth_mu = 0.0, truth_sigma2 = 0.0;
    auto* cmd_estimate = app.add_subcommand("estimate", "Estimate (mu, sigma2) from a sample");
    add_model_flags(cmd_estimate, est_flags, false, false);
    cmd_estimate->add_option("--input", est_input, "Sample CSV (stream_index,fpt)")->required();
    cmd_estimate->add_option("--method", est_method, "Estimator: mle|me|me-eps")
        ->check(CLI::IsMember({"mle", "me", "me-eps"}));
    cmd_estimate->add_option("--fit-method", est_flags.method,
                             "Threshold fit method: free|above|below|between")
        ->check(CLI::IsMember({"free", "above", "below", "between"}));
    cmd_estimate->add_option("--mu", est_flags.mu, "Window drift (defaults to the init estimate)");
    cmd_estimate->add_option("--sigma2", est_flags.sigma2,
                             "Window diffusion (defaults to the init estimate)");
    cmd_estimate->add_option("--truth-mu", truth_mu, "True drift, for the error report");
    cmd_estimate->add_option("--truth-sigma2", truth_sigma2, "True diffusion, for the error report");
    bool have_window_params = false;
    cmd_estimate->add_flag("--window-from-flags", have_window_params,
                           "Build the fit window from --mu/--sigma2 instead of the init estimate");

    // experiment
    std::string exp_config, exp_out_dir;
    auto* cmd_experiment = app.add_subcommand("experiment", "Run the configured grids");
    cmd_experiment->add_option("--config", exp_config, "TOML or JSON config")->required();
    cmd_experiment->add_option("--out", exp_out_dir, "Output directory (overrides config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitBadArgs;
    }

    try {
        if (cmd_fit->parsed()) {
            const auto m = fit_from_flags(fit_flags);
            nlohmann::json j;
            j["alpha1"] = m.fit.threshold.alpha1;
            j["beta1"] = m.fit.threshold.beta1;
            j["beta2"] = m.fit.threshold.beta2;
            j["t1"] = m.fit.threshold.t1;
            j["alpha2"] = m.fit.threshold.alpha2();
            j["tau0"] = m.win.tau0;
            j["tau_star"] = m.win.tau_star;
            j["objective"] = m.fit.objective;
            std::cout << j.dump(2) << '\n';
        } else if (cmd_density->parsed()) {
            if (t_steps < 2) throw std::invalid_argument("--t-steps must be at least 2");
            const auto m = fit_from_flags(dens_flags);
            std::string csv = "t,pdf,cdf\n";
            double prev_t = m.w.t0;
            double cdf = 0.0;
            for (int i = 0; i < t_steps; ++i) {
                const double t = t_min + (t_max_grid - t_min) * i / (t_steps - 1);
                if (t > prev_t) {
                    const double bps[] = {m.fit.threshold.t1};
                    cdf += fpt::numerics::integrate(
                        [&](double s) { return fpt::piecewise_fpt_pdf(m.w, m.fit.threshold, s); },
                        prev_t, t, {1e-10, 1e-8, 4000}, bps);
                    prev_t = t;
                }
                csv += fmt(t) + "," + fmt(fpt::piecewise_fpt_pdf(m.w, m.fit.threshold, t)) + "," +
                       fmt(cdf) + "\n";
            }
            write_output(csv, dens_out);
        } else if (cmd_moments->parsed()) {
            const auto m = fit_from_flags(mom_flags);
            const auto mom = fpt::fpt_moments(m.w, m.fit.threshold);
            nlohmann::json j;
            j["mean"] = mom.mean;
            j["variance"] = mom.variance;
            j["cv"] = mom.cv;
            j["total_mass"] = mom.total_mass;
            std::cout << j.dump(2) << '\n';
        } else if (cmd_simulate->parsed()) {
            const fpt::WienerParams w(sim_flags.mu, sim_flags.sigma2, sim_flags.x0, sim_flags.t0);
            const fpt::CurvedThreshold th(sim_flags.b0, sim_flags.eps, sim_flags.lambda,
                                          sim_flags.t0);
            fpt::SimConfig cfg;
            cfg.dt = sim_dt;
            cfg.n_paths = sim_n;
            cfg.seed = sim_seed;
            cfg.t_max = sim_t_max;
            const auto sample = fpt::simulate_sample(w, th, cfg);
            std::ostringstream os;
            fpt::write_sample_csv(os, sample);
            write_output(os.str(), sim_out);
        } else if (cmd_estimate->parsed()) {
            std::ifstream is(est_input);
            if (!is) throw std::invalid_argument("cannot open sample file: " + est_input);
            const auto sample = fpt::read_sample_csv(is);
            const fpt::CurvedThreshold th(est_flags.b0, est_flags.eps, est_flags.lambda,
                                          est_flags.t0);

            // The window (and hence the fitted threshold) needs process
            // parameters; default to the data-driven initial estimate.
            const auto init = fpt::default_phi_init(sample, th, est_flags.x0);
            const double win_mu = have_window_params ? est_flags.mu : init.mu_hat;
            const double win_sigma2 = have_window_params ? est_flags.sigma2 : init.sigma2_hat;
            const fpt::WienerParams w_win(win_mu, win_sigma2, est_flags.x0, est_flags.t0);
            const auto win =
                fpt::fit_window(w_win, th, est_flags.window_p_low, est_flags.window_p_high);
            const auto fit =
                fpt::fit_threshold(th, win, fpt::fit_method_from_string(est_flags.method));

            fpt::PhiEstimate result;
            const auto method = fpt::estim_method_from_string(est_method);
            switch (method) {
                case fpt::EstimMethod::mle:
                    result = fpt::mle(sample, fit.threshold, init, est_flags.x0);
                    break;
                case fpt::EstimMethod::me:
                    result = fpt::moment_estimate(sample, fit.threshold, init, est_flags.x0);
                    break;
                case fpt::EstimMethod::me_eps:
                    result = fpt::small_eps_moment_estimate(sample, th, init, est_flags.x0);
                    break;
            }
            std::optional<fpt::WienerParams> truth;
            if (truth_mu > 0.0 && truth_sigma2 > 0.0)
                truth.emplace(truth_mu, truth_sigma2, est_flags.x0, est_flags.t0);
            std::cout << fpt::estimate_report_json(result, truth) << '\n';
        } else if (cmd_experiment->parsed()) {
            auto cfg = fpt::load_experiment_config(exp_config);
            if (!exp_out_dir.empty()) cfg.output_dir = exp_out_dir;
            std::filesystem::create_directories(cfg.output_dir);

            const auto stats = fpt::run_statistics_grid(cfg);
            {
                std::ofstream os(cfg.output_dir + "/statistics.csv");
                write_csv(os, stats);
            }
            std::cerr << "statistics grid: " << stats.rows.size() << " rows, " << stats.failed
                      << " failed\n";

            const auto riae = fpt::run_riae_grid(cfg);
            {
                std::ofstream os(cfg.output_dir + "/riae.csv");
                write_csv(os, riae);
            }
            std::cerr << "riae grid: " << riae.rows.size() << " rows, " << riae.failed
                      << " failed\n";

            const auto est = fpt::run_estimation_grid(cfg);
            {
                std::ofstream os(cfg.output_dir + "/estimation.csv");
                write_csv(os, est);
            }
            std::cerr << "estimation grid: " << est.rows.size() << " rows, " << est.failed
                      << " failed\n";
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitBadArgs;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
