#include "fpt/simulator.hpp"

#include "fpt/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>

namespace fpt {

namespace rng {

std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t a) {
    return mix(seed ^ mix(a + kGamma));
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return derive(derive(seed, a), b);
}

Stream Stream::at(std::uint64_t seed, std::uint64_t stream_index) {
    return Stream{derive(seed, stream_index), 0};
}

std::uint64_t Stream::next_u64() {
    return mix(key + (++counter) * kGamma);
}

double Stream::next_uniform() {
    // 53 mantissa bits, offset by half an ulp so 0 and 1 are never produced.
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::next_normal() {
    return numerics::normal_quantile(next_uniform());
}

}  // namespace rng

double bridge_crossing_prob(double sigma2, double dt, double b_next, double x_i, double x_next) {
    const double quad = b_next * b_next - b_next * (x_i + x_next) + x_i * x_next;
    return std::min(std::exp(-2.0 * quad / (sigma2 * dt)), 1.0);
}

namespace {

double effective_t_max(const SimConfig& cfg, double t0) {
    return cfg.t_max > t0 ? cfg.t_max : t0 + 1e6 * cfg.dt;
}

void check_sim_inputs(const WienerParams& w, const CurvedThreshold& th, const SimConfig& cfg) {
    if (w.t0 != th.t0)
        throw std::invalid_argument("simulate: process and threshold start times differ");
    if (!(w.x0 < th.b0 + th.eps))
        throw std::invalid_argument("simulate: process must start below the threshold");
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("simulate: dt must be positive");
    if (cfg.n_paths < 1) throw std::invalid_argument("simulate: n_paths must be at least 1");
}

}  // namespace

std::optional<double> simulate_fpt(const WienerParams& w, const CurvedThreshold& th,
                                   const SimConfig& cfg, std::uint64_t stream_index) {
    check_sim_inputs(w, th, cfg);
    const double t_max = effective_t_max(cfg, w.t0);

    auto stream = rng::Stream::at(cfg.seed, stream_index);
    const double drift = w.mu * cfg.dt;
    const double vol = std::sqrt(w.sigma2 * cfg.dt);
    const double inv_s2dt = 1.0 / (w.sigma2 * cfg.dt);
    const double fade = std::exp(-th.lambda * cfg.dt);

    double x = w.x0;
    double decay = th.eps;  // eps * exp(-lambda * (t_i - t0)), advanced multiplicatively
    const std::int64_t max_steps = static_cast<std::int64_t>(std::ceil((t_max - w.t0) / cfg.dt));
    for (std::int64_t i = 0; i < max_steps; ++i) {
        const double z = stream.next_normal();
        const double u = stream.next_uniform();
        const double x_next = x + drift + vol * z;
        decay *= fade;
        const double b_next = th.b0 + decay;
        const double t_next = w.t0 + static_cast<double>(i + 1) * cfg.dt;
        if (x_next >= b_next) return t_next;
        const double quad = b_next * b_next - b_next * (x + x_next) + x * x_next;
        const double q = 2.0 * quad * inv_s2dt;
        // exp(-q) underflows for q > ~745, and u is strictly positive.
        if (q < 745.0 && std::exp(-q) > u) return t_next - 0.5 * cfg.dt;
        x = x_next;
    }
    return std::nullopt;
}

FptSample simulate_sample(const WienerParams& w, const CurvedThreshold& th, const SimConfig& cfg,
                          int n_threads) {
    check_sim_inputs(w, th, cfg);

    std::vector<std::optional<double>> results(static_cast<size_t>(cfg.n_paths));
    int workers = n_threads > 0 ? n_threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min<int>(workers, static_cast<int>(cfg.n_paths)));

    if (workers == 1) {
        for (std::int64_t i = 0; i < cfg.n_paths; ++i)
            results[static_cast<size_t>(i)] = simulate_fpt(w, th, cfg, static_cast<std::uint64_t>(i));
    } else {
        std::atomic<std::int64_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::int64_t i = next.fetch_add(1);
                if (i >= cfg.n_paths) return;
                results[static_cast<size_t>(i)] =
                    simulate_fpt(w, th, cfg, static_cast<std::uint64_t>(i));
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int k = 0; k < workers; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    FptSample sample;
    sample.config = cfg;
    sample.times.reserve(results.size());
    for (std::int64_t i = 0; i < cfg.n_paths; ++i) {
        const auto& r = results[static_cast<size_t>(i)];
        if (r) sample.times.push_back(*r);
        else sample.censored_streams.push_back(i);
    }
    return sample;
}

double EmpiricalCdf::operator()(double t) const {
    const auto it = std::upper_bound(sorted_times.begin(), sorted_times.end(), t);
    return static_cast<double>(it - sorted_times.begin()) /
           static_cast<double>(sorted_times.size());
}

EmpiricalStats empirical_stats(const FptSample& sample) {
    const auto& ts = sample.times;
    const auto n = static_cast<double>(ts.size());
    if (ts.size() < 2)
        throw std::invalid_argument("empirical_stats: needs at least two uncensored times");

    double mean = 0.0;
    for (double t : ts) mean += t;
    mean /= n;
    double ss = 0.0;
    for (double t : ts) ss += (t - mean) * (t - mean);
    const double variance = ss / (n - 1.0);

    EmpiricalStats stats;
    stats.moments.mean = mean;
    stats.moments.variance = variance;
    stats.moments.second_moment = variance + mean * mean;
    stats.moments.cv = std::sqrt(variance) / mean;
    stats.moments.total_mass =
        n / static_cast<double>(ts.size() + sample.censored_streams.size());
    stats.cdf.sorted_times = ts;
    std::sort(stats.cdf.sorted_times.begin(), stats.cdf.sorted_times.end());
    return stats;
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_sample_csv(std::ostream& os, const FptSample& sample) {
    os << "stream_index,fpt\n";
    size_t time_idx = 0;
    size_t cens_idx = 0;
    const std::int64_t total =
        static_cast<std::int64_t>(sample.times.size() + sample.censored_streams.size());
    for (std::int64_t s = 0; s < total; ++s) {
        if (cens_idx < sample.censored_streams.size() && sample.censored_streams[cens_idx] == s) {
            os << s << ",\n";
            ++cens_idx;
        } else {
            os << s << ',' << format_double(sample.times[time_idx++]) << '\n';
        }
    }
}

FptSample read_sample_csv(std::istream& is) {
    FptSample sample;
    std::string line;
    if (!std::getline(is, line) || line.rfind("stream_index,fpt", 0) != 0)
        throw std::invalid_argument("sample csv: missing 'stream_index,fpt' header");
    std::int64_t row = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("sample csv: malformed row: " + line);
        const std::int64_t stream = std::stoll(line.substr(0, comma));
        const std::string value = line.substr(comma + 1);
        if (value.empty()) {
            sample.censored_streams.push_back(stream);
        } else {
            sample.times.push_back(std::stod(value));
        }
        ++row;
    }
    sample.config.n_paths = row;
    return sample;
}

}  // namespace fpt
