#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ncp/core.hpp"
#include "ncp/errors.hpp"
#include "ncp/estimators.hpp"
#include "ncp/forecast.hpp"
#include "ncp/synthetic.hpp"

namespace ncp {

/// One `key = value` file: lowercase dotted keys, # comments (full-line or
/// trailing), blank lines ignored. Every entry remembers its line number
/// so errors and unknown-key reports can point at the file.
class ConfigMap {
public:
    struct Entry {
        std::string value;
        int line = 0;
        mutable bool used = false;
    };

    static ConfigMap from_string(const std::string &text, const std::string &origin) {
        ConfigMap cm;
        cm.origin_ = origin;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos)
                line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty())
                continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": expected `key = value`");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
            if (cm.entries_.count(key))
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                                  key + "' (first at line " +
                                  std::to_string(cm.entries_[key].line) + ")");
            cm.entries_[key] = Entry{value, lineno, false};
        }
        return cm;
    }

    static ConfigMap from_file(const std::filesystem::path &path) {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open config file " + path.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        return from_string(buf.str(), path.string());
    }

    bool has(const std::string &key) const { return entries_.count(key) != 0; }

    std::optional<std::string> get(const std::string &key) const {
        auto it = entries_.find(key);
        if (it == entries_.end())
            return std::nullopt;
        it->second.used = true;
        return it->second.value;
    }

    double get_double(const std::string &key, double fallback) const {
        auto v = get(key);
        if (!v)
            return fallback;
        char *end = nullptr;
        const double x = std::strtod(v->c_str(), &end);
        if (end == v->c_str() || *end != '\0' || !std::isfinite(x))
            bad(key, "a number");
        return x;
    }

    std::int64_t get_int(const std::string &key, std::int64_t fallback) const {
        auto v = get(key);
        if (!v)
            return fallback;
        char *end = nullptr;
        const long long x = std::strtoll(v->c_str(), &end, 10);
        if (end == v->c_str() || *end != '\0')
            bad(key, "an integer");
        return static_cast<std::int64_t>(x);
    }

    bool get_bool(const std::string &key, bool fallback) const {
        auto v = get(key);
        if (!v)
            return fallback;
        if (*v == "true" || *v == "1" || *v == "yes")
            return true;
        if (*v == "false" || *v == "0" || *v == "no")
            return false;
        bad(key, "a boolean (true/false)");
        return fallback;
    }

    std::string get_string(const std::string &key, const std::string &fallback) const {
        auto v = get(key);
        return v ? *v : fallback;
    }

    /// Typo guard: every key must have been consumed by the builder.
    void reject_unused() const {
        for (const auto &[key, entry] : entries_)
            if (!entry.used)
                throw ConfigError(origin_ + ":" + std::to_string(entry.line) +
                                  ": unknown key '" + key + "'");
    }

    const std::string &origin() const { return origin_; }

private:
    static std::string trim(const std::string &s) {
        const auto first = s.find_first_not_of(" \t");
        if (first == std::string::npos)
            return "";
        const auto last = s.find_last_not_of(" \t");
        return s.substr(first, last - first + 1);
    }

    [[noreturn]] void bad(const std::string &key, const char *what) const {
        const auto it = entries_.find(key);
        throw ConfigError(origin_ + ":" + std::to_string(it->second.line) + ": key '" + key +
                          "' must be " + what + " (got '" + it->second.value + "')");
    }

    std::string origin_;
    std::map<std::string, Entry> entries_;
};

namespace detail {

/// Separator-split with per-piece whitespace trim; empty pieces are
/// dropped, so "a, b," parses the same as "a,b".
inline std::vector<std::string> split_trimmed(const std::string &text, char sep) {
    std::vector<std::string> out;
    std::string::size_type start = 0;
    while (start <= text.size()) {
        const auto pos = text.find(sep, start);
        std::string piece =
            pos == std::string::npos ? text.substr(start) : text.substr(start, pos - start);
        const auto first = piece.find_first_not_of(" \t");
        if (first == std::string::npos)
            piece.clear();
        else
            piece = piece.substr(first, piece.find_last_not_of(" \t") - first + 1);
        if (!piece.empty())
            out.push_back(std::move(piece));
        if (pos == std::string::npos)
            break;
        start = pos + 1;
    }
    return out;
}

} // namespace detail

/// "start:stop:step" (inclusive, tolerance half a step) or an explicit
/// comma list.
inline std::vector<double> parse_levels(const std::string &text) {
    std::vector<double> out;
    const char sep = text.find(':') != std::string::npos ? ':' : ',';
    std::vector<double> parts;
    for (const std::string &piece : detail::split_trimmed(text, sep)) {
        char *end = nullptr;
        const double x = std::strtod(piece.c_str(), &end);
        if (end == piece.c_str() || *end != '\0' || !std::isfinite(x))
            throw ConfigError("levels: '" + piece + "' is not a number");
        parts.push_back(x);
    }
    if (sep == ':') {
        if (parts.size() != 3)
            throw ConfigError("levels: range form needs start:stop:step");
        const double lo = parts[0], hi = parts[1], step = parts[2];
        if (!(step > 0.0) || !(hi >= lo))
            throw ConfigError("levels: need stop >= start and step > 0");
        for (double v = lo; v <= hi + step / 2.0; v += step)
            out.push_back(v);
    } else {
        out = parts;
    }
    if (out.empty())
        throw ConfigError("levels: empty list");
    return out;
}

/// Comma list of method names; empty pieces are ignored.
inline std::vector<Method> parse_method_list(const std::string &text) {
    std::vector<Method> out;
    for (const std::string &piece : detail::split_trimmed(text, ','))
        out.push_back(method_from_name(piece));
    if (out.empty())
        throw ConfigError("methods: empty list");
    return out;
}

/// Comma list of unsigned seeds; empty pieces are ignored.
inline std::vector<std::uint64_t> parse_seed_list(const std::string &text) {
    std::vector<std::uint64_t> out;
    for (const std::string &piece : detail::split_trimmed(text, ',')) {
        char *end = nullptr;
        const unsigned long long x = std::strtoull(piece.c_str(), &end, 10);
        if (end == piece.c_str() || *end != '\0')
            throw ConfigError("seeds: '" + piece + "' is not an integer");
        out.push_back(static_cast<std::uint64_t>(x));
    }
    if (out.empty())
        throw ConfigError("seeds: empty list");
    return out;
}

enum class ExperimentKind { synthetic, inflation };

/// Fully resolved experiment description. Built from a ConfigMap with
/// per-experiment defaults, then optionally overridden by CLI flags.
/// Semantic range checks live in validate(), not here, so a broken file
/// can still be loaded and reported on.
struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::synthetic;
    std::vector<Method> methods{Method::eg, Method::pg, Method::independent,
                                Method::projected_tracker};
    std::vector<std::uint64_t> seeds{1};
    std::int64_t dt = 10000;
    std::string out_dir = "out";

    std::vector<double> alphas;
    double score_bound = 10.0;

    std::map<Method, double> eta_by_method;
    std::optional<double> eta_all;
    std::optional<double> mu;
    double min_gap = 0.0;
    bool tracker_err_from_shadow = false;

    WalkConfig walk;
    bool dump_walk = false;

    std::string data_path = "data/cpiaucsl_sample.csv";
    std::string value_column = "CPIAUCSL";
    std::int64_t window = 60;
    bool window_counts_total = false;

    CoverageGrid grid() const { return CoverageGrid(alphas, score_bound); }

    EstimatorConfig estimator(Method m) const {
        CoverageGrid g = grid();
        double eta = EstimatorConfig::default_eta(m, g);
        if (eta_all)
            eta = *eta_all;
        if (auto it = eta_by_method.find(m); it != eta_by_method.end())
            eta = it->second;
        const double mu_v = mu ? *mu : EstimatorConfig::default_mu(g);
        EstimatorConfig ec{m, std::move(g), eta, mu_v, min_gap, tracker_err_from_shadow, {}};
        return ec;
    }
};

/// `forced` pins the experiment kind (the CLI subcommand); a config file
/// naming the other kind is an error rather than a silent override.
inline ExperimentConfig build_experiment_config(const ConfigMap &cm,
                                                std::optional<ExperimentKind> forced = {}) {
    ExperimentConfig cfg;
    const char *default_kind =
        forced && *forced == ExperimentKind::inflation ? "inflation" : "synthetic";
    const std::string kind = cm.get_string("experiment", default_kind);
    if (kind == "synthetic")
        cfg.experiment = ExperimentKind::synthetic;
    else if (kind == "inflation")
        cfg.experiment = ExperimentKind::inflation;
    else
        throw ConfigError("experiment must be 'synthetic' or 'inflation', got '" + kind + "'");
    if (forced && cfg.experiment != *forced)
        throw ConfigError("config sets experiment = " + kind +
                          " but the subcommand runs the other experiment");

    const bool synth = cfg.experiment == ExperimentKind::synthetic;
    cfg.score_bound = cm.get_double("score_bound", synth ? 10.0 : 0.25);
    const std::size_t default_k = synth ? 9 : 99;
    if (auto lv = cm.get("levels")) {
        cfg.alphas = parse_levels(*lv);
    } else {
        cfg.alphas.resize(default_k);
        for (std::size_t i = 0; i < default_k; ++i)
            cfg.alphas[i] = static_cast<double>(i + 1) / static_cast<double>(default_k + 1);
    }

    if (auto mv = cm.get("methods"))
        cfg.methods = parse_method_list(*mv);
    if (auto sv = cm.get("seeds"))
        cfg.seeds = parse_seed_list(*sv);

    cfg.dt = cm.get_int("dt", synth ? 10000 : 120);
    cfg.out_dir = cm.get_string("out_dir", "out");

    if (cm.has("eta"))
        cfg.eta_all = cm.get_double("eta", 0.0);
    for (Method m : {Method::eg, Method::pg, Method::independent, Method::projected_tracker}) {
        const std::string key = std::string("eta.") + method_name(m);
        if (cm.has(key))
            cfg.eta_by_method[m] = cm.get_double(key, 0.0);
    }
    if (cm.has("mu"))
        cfg.mu = cm.get_double("mu", 0.0);
    cfg.min_gap = cm.get_double("min_gap", 0.0);
    cfg.tracker_err_from_shadow = cm.get_bool("tracker_err_from_shadow", false);

    cfg.walk.a = cm.get_double("walk.a", cfg.walk.a);
    cfg.walk.b = cm.get_double("walk.b", cfg.walk.b);
    cfg.walk.z1 = cm.get_double("walk.z1", cfg.walk.z1);
    cfg.walk.sigma = cm.get_double("walk.sigma", cfg.walk.sigma);
    cfg.walk.width_u = cm.get_double("walk.width", cfg.walk.width_u);
    cfg.walk.horizon = cm.get_int("walk.horizon", cfg.walk.horizon);
    cfg.dump_walk = cm.get_bool("dump_walk", false);

    cfg.data_path = cm.get_string("data", cfg.data_path);
    cfg.value_column = cm.get_string("value_column", cfg.value_column);
    cfg.window = cm.get_int("window", cfg.window);
    cfg.window_counts_total = cm.get_bool("window_counts_total", false);

    cm.reject_unused();
    return cfg;
}

/// Every violated invariant, each prefixed with the config path that
/// caused it. Empty means the config is runnable.
inline std::vector<std::string> validate(const ExperimentConfig &cfg) {
    std::vector<std::string> out;
    const std::size_t k = cfg.alphas.size();

    if (cfg.methods.empty())
        out.push_back("methods: at least one method is required");
    if (k == 0)
        out.push_back("levels: at least one level is required");
    for (std::size_t i = 0; i < k; ++i) {
        if (!(cfg.alphas[i] > 0.0) || !(cfg.alphas[i] < 1.0)) {
            out.push_back("levels: alpha_" + std::to_string(i + 1) + " must lie in (0,1)");
            break;
        }
        if (i > 0 && !(cfg.alphas[i] > cfg.alphas[i - 1])) {
            out.push_back("levels: alphas must be strictly increasing");
            break;
        }
    }
    if (!(cfg.score_bound > 0.0) || !std::isfinite(cfg.score_bound))
        out.push_back("score_bound: must be positive and finite");
    if (cfg.dt < 1)
        out.push_back("dt: must be >= 1");
    if (cfg.eta_all && !(*cfg.eta_all > 0.0))
        out.push_back("eta: must be > 0");
    for (const auto &[m, eta] : cfg.eta_by_method)
        if (!(eta > 0.0))
            out.push_back(std::string("eta.") + method_name(m) + ": must be > 0");
    if (cfg.mu && k > 0 && !(*cfg.mu > 0.0 && *cfg.mu < 1.0 / static_cast<double>(k + 1)))
        out.push_back("mu: must satisfy 0 < mu < 1/(K+1)");
    if (cfg.min_gap < 0.0 ||
        (k > 1 && static_cast<double>(k - 1) * cfg.min_gap > cfg.score_bound))
        out.push_back("min_gap: must be >= 0 and feasible within [0, B]");

    if (cfg.experiment == ExperimentKind::synthetic) {
        if (cfg.seeds.empty())
            out.push_back("seeds: at least one seed is required for synthetic runs");
        try {
            validate_walk_support(cfg.walk, cfg.score_bound);
        } catch (const ConfigError &e) {
            out.push_back(std::string("walk: ") + e.what());
        }
    } else {
        if (cfg.data_path.empty())
            out.push_back("data: a CPI csv path is required for inflation runs");
        if (cfg.window < 1)
            out.push_back("window: must be >= 1");
        if (cfg.window_counts_total && cfg.window < 4)
            out.push_back("window: must be >= 4 when it counts total observations");
    }
    return out;
}

} // namespace ncp
