#include "fpt/experiments.hpp"

#include <json.hpp>

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fpt {

namespace {

// Minimal TOML reader covering the config grammar: [section] headers, scalar
// and array values, "#" comments, double-quoted strings.
struct TomlValue {
    std::string scalar;
    std::vector<std::string> array;
    bool is_array = false;
};

using TomlTable = std::map<std::string, TomlValue>;

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

std::map<std::string, TomlTable> parse_toml(std::istream& is) {
    std::map<std::string, TomlTable> tables;
    std::string section;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: malformed section header at line " +
                                            std::to_string(line_no));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key = value at line " +
                                        std::to_string(line_no));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        TomlValue tv;
        if (!value.empty() && value.front() == '[') {
            if (value.back() != ']')
                throw std::invalid_argument("config: unterminated array at line " +
                                            std::to_string(line_no));
            tv.is_array = true;
            std::string body = value.substr(1, value.size() - 2);
            std::stringstream ss(body);
            std::string item;
            while (std::getline(ss, item, ',')) {
                item = trim(item);
                if (!item.empty()) tv.array.push_back(unquote(item));
            }
        } else {
            tv.scalar = unquote(value);
        }
        tables[section][key] = tv;
    }
    return tables;
}

double to_double(const std::string& s) {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("config: not a number: " + s);
    return v;
}

std::vector<double> to_doubles(const TomlValue& tv) {
    std::vector<double> out;
    if (tv.is_array) {
        for (const auto& s : tv.array) out.push_back(to_double(s));
    } else {
        out.push_back(to_double(tv.scalar));
    }
    return out;
}

ExperimentConfig from_toml(std::istream& is) {
    const auto tables = parse_toml(is);
    ExperimentConfig cfg;
    auto get = [&](const std::string& section, const std::string& key) -> const TomlValue* {
        const auto ti = tables.find(section);
        if (ti == tables.end()) return nullptr;
        const auto ki = ti->second.find(key);
        return ki == ti->second.end() ? nullptr : &ki->second;
    };

    if (const auto* v = get("model", "mu")) cfg.mu = to_double(v->scalar);
    if (const auto* v = get("model", "sigma2")) cfg.sigma2 = to_doubles(*v);
    if (const auto* v = get("model", "x0")) cfg.x0 = to_double(v->scalar);
    if (const auto* v = get("model", "t0")) cfg.t0 = to_double(v->scalar);
    if (const auto* v = get("threshold", "b0")) cfg.b0 = to_double(v->scalar);
    if (const auto* v = get("threshold", "eps")) cfg.eps = to_doubles(*v);
    if (const auto* v = get("threshold", "lambda")) cfg.lambda = to_doubles(*v);
    if (const auto* v = get("sim", "dt")) cfg.dt = to_double(v->scalar);
    if (const auto* v = get("sim", "n_paths")) cfg.n_paths = static_cast<std::int64_t>(to_double(v->scalar));
    if (const auto* v = get("sim", "repetitions")) cfg.repetitions = static_cast<int>(to_double(v->scalar));
    if (const auto* v = get("sim", "n_obs")) cfg.n_obs = static_cast<std::int64_t>(to_double(v->scalar));
    if (const auto* v = get("sim", "seed")) cfg.seed = static_cast<std::uint64_t>(to_double(v->scalar));
    if (const auto* v = get("fit", "method")) cfg.fit_method = fit_method_from_string(v->scalar);
    if (const auto* v = get("fit", "window_p_low")) cfg.window_p_low = to_double(v->scalar);
    if (const auto* v = get("fit", "window_p_high")) cfg.window_p_high = to_double(v->scalar);
    if (const auto* v = get("output", "dir")) cfg.output_dir = v->scalar;
    return cfg;
}

ExperimentConfig from_json(std::istream& is) {
    nlohmann::json j;
    is >> j;
    ExperimentConfig cfg;
    auto load_list = [](const nlohmann::json& node) {
        std::vector<double> out;
        if (node.is_array())
            for (const auto& v : node) out.push_back(v.get<double>());
        else
            out.push_back(node.get<double>());
        return out;
    };
    if (j.contains("model")) {
        const auto& m = j["model"];
        if (m.contains("mu")) cfg.mu = m["mu"].get<double>();
        if (m.contains("sigma2")) cfg.sigma2 = load_list(m["sigma2"]);
        if (m.contains("x0")) cfg.x0 = m["x0"].get<double>();
        if (m.contains("t0")) cfg.t0 = m["t0"].get<double>();
    }
    if (j.contains("threshold")) {
        const auto& t = j["threshold"];
        if (t.contains("b0")) cfg.b0 = t["b0"].get<double>();
        if (t.contains("eps")) cfg.eps = load_list(t["eps"]);
        if (t.contains("lambda")) cfg.lambda = load_list(t["lambda"]);
    }
    if (j.contains("sim")) {
        const auto& s = j["sim"];
        if (s.contains("dt")) cfg.dt = s["dt"].get<double>();
        if (s.contains("n_paths")) cfg.n_paths = s["n_paths"].get<std::int64_t>();
        if (s.contains("repetitions")) cfg.repetitions = s["repetitions"].get<int>();
        if (s.contains("n_obs")) cfg.n_obs = s["n_obs"].get<std::int64_t>();
        if (s.contains("seed")) cfg.seed = s["seed"].get<std::uint64_t>();
    }
    if (j.contains("fit")) {
        const auto& f = j["fit"];
        if (f.contains("method")) cfg.fit_method = fit_method_from_string(f["method"].get<std::string>());
        if (f.contains("window_p_low")) cfg.window_p_low = f["window_p_low"].get<double>();
        if (f.contains("window_p_high")) cfg.window_p_high = f["window_p_high"].get<double>();
    }
    if (j.contains("output") && j["output"].contains("dir"))
        cfg.output_dir = j["output"]["dir"].get<std::string>();
    return cfg;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (sigma2.empty() || eps.empty() || lambda.empty())
        throw std::invalid_argument("config: sigma2, eps and lambda lists must be nonempty");
    if (!(mu > 0.0)) throw std::invalid_argument("config: mu must be positive");
    for (double s : sigma2)
        if (!(s > 0.0)) throw std::invalid_argument("config: sigma2 values must be positive");
    for (double e : eps)
        if (!(e >= 0.0)) throw std::invalid_argument("config: eps values must be nonnegative");
    for (double l : lambda)
        if (!(l >= 0.0)) throw std::invalid_argument("config: lambda values must be nonnegative");
    if (!(b0 > x0)) throw std::invalid_argument("config: b0 must exceed x0");
    if (!(dt > 0.0)) throw std::invalid_argument("config: dt must be positive");
    if (n_paths < 1 || n_obs < 2) throw std::invalid_argument("config: n_paths >= 1, n_obs >= 2");
    if (repetitions < 1) throw std::invalid_argument("config: repetitions must be at least 1");
    if (!(window_p_low > 0.0 && window_p_low < window_p_high && window_p_high < 1.0))
        throw std::invalid_argument("config: requires 0 < window_p_low < window_p_high < 1");
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("config: cannot open " + path);
    ExperimentConfig cfg;
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        cfg = from_json(is);
    } else if (path.size() >= 5 && path.substr(path.size() - 5) == ".toml") {
        cfg = from_toml(is);
    } else {
        throw std::invalid_argument("config: expected a .toml or .json file: " + path);
    }
    cfg.validate();
    return cfg;
}

}  // namespace fpt
