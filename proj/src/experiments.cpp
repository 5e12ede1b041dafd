#include "fpt/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

namespace fpt {

namespace {

struct Cell {
    int index;
    double sigma2;
    double eps;
    double lambda;
};

std::vector<Cell> enumerate_cells(const ExperimentConfig& cfg) {
    std::vector<Cell> cells;
    int index = 0;
    for (double s2 : cfg.sigma2)
        for (double e : cfg.eps)
            for (double l : cfg.lambda) cells.push_back({index++, s2, e, l});
    return cells;
}

// Runs fn over all cells on a small worker pool; exceptions surface through
// the per-row error fields inside fn, never here.
void for_each_cell(const std::vector<Cell>& cells, const std::function<void(const Cell&)>& fn) {
    const int workers = std::max(1, std::min<int>(std::thread::hardware_concurrency(),
                                                  static_cast<int>(cells.size())));
    if (workers == 1) {
        for (const auto& c : cells) fn(c);
        return;
    }
    std::atomic<size_t> next{0};
    auto loop = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            fn(cells[i]);
        }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(loop);
    for (auto& t : pool) t.join();
}

std::string sanitize(std::string message) {
    std::replace(message.begin(), message.end(), ',', ';');
    std::replace(message.begin(), message.end(), '\n', ' ');
    return message;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

SimConfig make_sim_config(const ExperimentConfig& cfg, std::int64_t n_paths, std::uint64_t seed,
                          double t0, const FitWindow& win) {
    SimConfig sim;
    sim.dt = cfg.dt;
    sim.n_paths = n_paths;
    sim.seed = seed;
    sim.t_max = t0 + 20.0 * (win.tau_star - t0);
    return sim;
}

}  // namespace

StatisticsTable run_statistics_grid(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto cells = enumerate_cells(cfg);
    StatisticsTable table;
    table.rows.resize(cells.size());
    std::atomic<int> failed{0};

    for_each_cell(cells, [&](const Cell& cell) {
        StatisticsRow& row = table.rows[static_cast<size_t>(cell.index)];
        row.sigma2 = cell.sigma2;
        row.eps = cell.eps;
        row.lambda = cell.lambda;
        try {
            const WienerParams w(cfg.mu, cell.sigma2, cfg.x0, cfg.t0);
            const CurvedThreshold th(cfg.b0, cell.eps, cell.lambda, cfg.t0);
            const auto win = fit_window(w, th, cfg.window_p_low, cfg.window_p_high);
            const auto fit = fit_threshold(th, win, cfg.fit_method);
            const auto moments = fpt_moments(w, fit.threshold);
            row.mean_th = moments.mean;
            row.var_th = moments.variance;
            row.cv_th = moments.cv;
            row.total_mass = moments.total_mass;
            row.mean_small_eps = small_eps_mean(w, th);
            row.var_small_eps = small_eps_var(w, th);
            row.cv_small_eps = std::sqrt(std::max(row.var_small_eps, 0.0)) / row.mean_small_eps;

            const auto sim = make_sim_config(cfg, cfg.n_paths,
                                             rng::derive(cfg.seed, cell.index), cfg.t0, win);
            const auto sample = simulate_sample(w, th, sim, 1);
            const auto emp = empirical_stats(sample);
            row.mean_emp = emp.moments.mean;
            row.var_emp = emp.moments.variance;
            row.cv_emp = emp.moments.cv;
        } catch (const std::exception& e) {
            row.error = sanitize(e.what());
            failed.fetch_add(1);
        }
    });
    table.failed = failed.load();
    return table;
}

EstimationTable run_estimation_grid(const ExperimentConfig& cfg,
                                    const EstimatorOverride& override_estimator) {
    cfg.validate();
    const auto cells = enumerate_cells(cfg);
    const EstimMethod methods[] = {EstimMethod::mle, EstimMethod::me, EstimMethod::me_eps};
    EstimationTable table;
    table.rows.resize(cells.size() * 3);
    std::atomic<int> failed{0};

    for_each_cell(cells, [&](const Cell& cell) {
        const size_t base = static_cast<size_t>(cell.index) * 3;
        for (size_t m = 0; m < 3; ++m) {
            auto& row = table.rows[base + m];
            row.sigma2 = cell.sigma2;
            row.eps = cell.eps;
            row.lambda = cell.lambda;
            row.method = to_string(methods[m]);
        }
        try {
            const WienerParams truth(cfg.mu, cell.sigma2, cfg.x0, cfg.t0);
            const CurvedThreshold th(cfg.b0, cell.eps, cell.lambda, cfg.t0);
            const auto win = fit_window(truth, th, cfg.window_p_low, cfg.window_p_high);
            const auto fit = fit_threshold(th, win, cfg.fit_method);

            std::vector<std::vector<PhiEstimate>> estimates(3);
            for (int rep = 0; rep < cfg.repetitions; ++rep) {
                const auto sim = make_sim_config(cfg, cfg.n_obs,
                                                 rng::derive(cfg.seed, cell.index, rep), cfg.t0, win);
                const auto sample = simulate_sample(truth, th, sim, 1);
                for (size_t m = 0; m < 3; ++m) {
                    if (override_estimator) {
                        estimates[m].push_back(
                            override_estimator(methods[m], sample, truth, fit.threshold, th));
                        continue;
                    }
                    const auto init = default_phi_init(sample, th, cfg.x0);
                    switch (methods[m]) {
                        case EstimMethod::mle:
                            estimates[m].push_back(mle(sample, fit.threshold, init, cfg.x0));
                            break;
                        case EstimMethod::me:
                            estimates[m].push_back(
                                moment_estimate(sample, fit.threshold, init, cfg.x0));
                            break;
                        case EstimMethod::me_eps:
                            estimates[m].push_back(
                                small_eps_moment_estimate(sample, th, init, cfg.x0));
                            break;
                    }
                }
            }
            for (size_t m = 0; m < 3; ++m) {
                const auto rep = relative_errors(estimates[m], truth);
                auto& row = table.rows[base + m];
                row.r_me_mu = rep.r_me_mu;
                row.r_mse_mu = rep.r_mse_mu;
                row.r_me_sigma2 = rep.r_me_sigma2;
                row.r_mse_sigma2 = rep.r_mse_sigma2;
            }
        } catch (const std::exception& e) {
            for (size_t m = 0; m < 3; ++m) table.rows[base + m].error = sanitize(e.what());
            failed.fetch_add(1);
        }
    });
    table.failed = failed.load();
    return table;
}

RiaeTable run_riae_grid(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto cells = enumerate_cells(cfg);
    RiaeTable table;
    table.rows.resize(cells.size());
    std::atomic<int> failed{0};

    for_each_cell(cells, [&](const Cell& cell) {
        RiaeRow& row = table.rows[static_cast<size_t>(cell.index)];
        row.sigma2 = cell.sigma2;
        row.eps = cell.eps;
        row.lambda = cell.lambda;
        try {
            const WienerParams w(cfg.mu, cell.sigma2, cfg.x0, cfg.t0);
            const CurvedThreshold th(cfg.b0, cell.eps, cell.lambda, cfg.t0);
            const auto win = fit_window(w, th, cfg.window_p_low, cfg.window_p_high);
            const auto fits = fit_all(th, win);

            const auto sim = make_sim_config(cfg, cfg.n_paths,
                                             rng::derive(cfg.seed, cell.index), cfg.t0, win);
            const auto sample = simulate_sample(w, th, sim, 1);

            auto score = [&](const FitResult& fit) {
                const double horizon = fpt_horizon(w, fit.threshold, 1e-9);
                const auto cdf = CdfTable::build(w, fit.threshold, horizon);
                return r_iae([&](double t) { return cdf(t); }, sample, cfg.t0);
            };
            row.riae_free = score(fits.free);
            row.riae_above = score(fits.above);
            row.riae_below = score(fits.below);
            row.riae_between = score(fits.between);
        } catch (const std::exception& e) {
            row.error = sanitize(e.what());
            failed.fetch_add(1);
        }
    });
    table.failed = failed.load();
    return table;
}

void write_csv(std::ostream& os, const StatisticsTable& table) {
    os << "sigma2,eps,lambda,mean_th,var_th,cv_th,total_mass,"
          "mean_small_eps,var_small_eps,cv_small_eps,mean_emp,var_emp,cv_emp,error\n";
    for (const auto& r : table.rows) {
        os << fmt(r.sigma2) << ',' << fmt(r.eps) << ',' << fmt(r.lambda) << ',' << fmt(r.mean_th)
           << ',' << fmt(r.var_th) << ',' << fmt(r.cv_th) << ',' << fmt(r.total_mass) << ','
           << fmt(r.mean_small_eps) << ',' << fmt(r.var_small_eps) << ',' << fmt(r.cv_small_eps)
           << ',' << fmt(r.mean_emp) << ',' << fmt(r.var_emp) << ',' << fmt(r.cv_emp) << ','
           << r.error << '\n';
    }
}

void write_csv(std::ostream& os, const EstimationTable& table) {
    os << "sigma2,eps,lambda,method,r_me_mu,r_mse_mu,r_me_sigma2,r_mse_sigma2,error\n";
    for (const auto& r : table.rows) {
        os << fmt(r.sigma2) << ',' << fmt(r.eps) << ',' << fmt(r.lambda) << ',' << r.method << ','
           << fmt(r.r_me_mu) << ',' << fmt(r.r_mse_mu) << ',' << fmt(r.r_me_sigma2) << ','
           << fmt(r.r_mse_sigma2) << ',' << r.error << '\n';
    }
}

void write_csv(std::ostream& os, const RiaeTable& table) {
    os << "sigma2,eps,lambda,riae_free,riae_above,riae_below,riae_between,error\n";
    for (const auto& r : table.rows) {
        os << fmt(r.sigma2) << ',' << fmt(r.eps) << ',' << fmt(r.lambda) << ','
           << fmt(r.riae_free) << ',' << fmt(r.riae_above) << ',' << fmt(r.riae_below) << ','
           << fmt(r.riae_between) << ',' << r.error << '\n';
    }
}

}  // namespace fpt
