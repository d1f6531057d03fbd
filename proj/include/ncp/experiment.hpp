#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <limits>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ncp/config.hpp"
#include "ncp/core.hpp"
#include "ncp/csv.hpp"
#include "ncp/errors.hpp"
#include "ncp/estimators.hpp"
#include "ncp/forecast.hpp"
#include "ncp/metrics.hpp"
#include "ncp/synthetic.hpp"

namespace ncp {

struct SyntheticRun {
    WalkPath path;
    std::vector<StepRecord> records; // q_star filled from the latent walk
    std::int64_t clamp_warnings = 0;
};

/// One (method, seed) pass over a fresh walk. Records carry the oracle
/// thresholds so every metric and the regret evaluator can run offline.
inline SyntheticRun run_one_synthetic(const ExperimentConfig &cfg, Method method,
                                      std::uint64_t seed) {
    WalkConfig wc = cfg.walk;
    wc.seed = seed;
    validate_walk_support(wc, cfg.score_bound);
    const CoverageGrid grid = cfg.grid();

    SyntheticRun run;
    run.path = generate_walk(wc);
    Estimator est(cfg.estimator(method));
    run.records.reserve(run.path.s.size());
    for (std::size_t t = 0; t < run.path.s.size(); ++t) {
        StepRecord rec = est.observe(run.path.s[t]);
        rec.q_star = true_quantiles(run.path.z[t], wc, grid);
        run.records.push_back(std::move(rec));
    }
    run.clamp_warnings = est.clamp_warnings();
    return run;
}

inline void write_records_csv(const std::filesystem::path &path,
                              const std::vector<StepRecord> &records) {
    CsvBuilder b;
    const std::size_t k = records.empty() ? 0 : records.front().q.size();
    const bool with_oracle = !records.empty() && !records.front().q_star.empty();
    b.field("t").field("score");
    for (std::size_t i = 1; i <= k; ++i)
        b.field("q_" + std::to_string(i));
    for (std::size_t i = 1; i <= k; ++i)
        b.field("err_" + std::to_string(i));
    if (with_oracle)
        for (std::size_t i = 1; i <= k; ++i)
            b.field("qstar_" + std::to_string(i));
    b.endrow();
    for (const StepRecord &r : records) {
        b.field(r.t).field(r.score);
        for (double v : r.q)
            b.field(v);
        for (std::uint8_t e : r.err)
            b.field(static_cast<std::int64_t>(e));
        if (with_oracle)
            for (double v : r.q_star)
                b.field(v);
        b.endrow();
    }
    write_file_atomic(path, b.str());
}

/// Inverse of write_records_csv, for the metrics-recompute path.
inline std::vector<StepRecord> read_records_csv(const std::filesystem::path &path) {
    const auto rows = read_csv(path);
    if (rows.size() < 2)
        throw DataError(path.string() + ": no records");
    const auto &header = rows.front();
    std::size_t k = 0;
    bool with_oracle = false;
    for (const auto &h : header) {
        if (h.rfind("q_", 0) == 0)
            ++k;
        if (h.rfind("qstar_", 0) == 0)
            with_oracle = true;
    }
    if (k == 0 || header.size() != 2 + (with_oracle ? 3 : 2) * k)
        throw DataError(path.string() + ": unrecognized records header");

    auto num = [&](const std::string &cell, std::size_t r) {
        char *end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0')
            throw DataError(path.string() + ": row " + std::to_string(r + 1) +
                            " has non-numeric field '" + cell + "'");
        return v;
    };

    std::vector<StepRecord> records;
    records.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto &row = rows[r];
        if (row.size() != header.size())
            throw DataError(path.string() + ": row " + std::to_string(r + 1) + " is short");
        StepRecord rec;
        rec.t = static_cast<std::int64_t>(num(row[0], r));
        rec.score = num(row[1], r);
        rec.q.resize(k);
        rec.err.resize(k);
        for (std::size_t i = 0; i < k; ++i) {
            rec.q[i] = num(row[2 + i], r);
            rec.err[i] = num(row[2 + k + i], r) != 0.0 ? 1 : 0;
        }
        if (with_oracle) {
            rec.q_star.resize(k);
            for (std::size_t i = 0; i < k; ++i)
                rec.q_star[i] = num(row[2 + 2 * k + i], r);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

/// One tidy file per metric series, prefix_<metric>.csv.
inline void write_metric_csvs(const std::filesystem::path &out_dir, const std::string &prefix,
                              const RunMetrics &m) {
    {
        CsvBuilder b;
        b.field("level").field("value").endrow();
        for (std::size_t i = 0; i < m.ce.size(); ++i)
            b.field(i + 1).field(m.ce[i]).endrow();
        write_file_atomic(out_dir / (prefix + "_ce.csv"), b.str());
    }
    {
        CsvBuilder b;
        b.field("t").field("value").endrow();
        for (std::size_t t = 0; t < m.ce_sum_cumulative.size(); ++t)
            b.field(t + 1).field(m.ce_sum_cumulative[t]).endrow();
        write_file_atomic(out_dir / (prefix + "_ce_sum.csv"), b.str());
    }
    if (!m.l1_rolling.empty()) {
        CsvBuilder b;
        b.field("t").field("value").endrow();
        for (std::size_t t = 0; t < m.l1_rolling.size(); ++t)
            b.field(t + 1).field(m.l1_rolling[t]).endrow();
        write_file_atomic(out_dir / (prefix + "_l1.csv"), b.str());
    }
    {
        CsvBuilder b;
        b.field("t").field("level").field("value").endrow();
        for (std::size_t i = 0; i < m.set_size_rolling.size(); ++i)
            for (std::size_t t = 0; t < m.set_size_rolling[i].size(); ++t)
                b.field(t + 1).field(i + 1).field(m.set_size_rolling[i][t]).endrow();
        write_file_atomic(out_dir / (prefix + "_set_size.csv"), b.str());
    }
    if (!m.min_gap.empty()) {
        CsvBuilder b;
        b.field("t").field("value").endrow();
        for (std::size_t t = 0; t < m.min_gap.size(); ++t)
            b.field(t + 1).field(m.min_gap[t]).endrow();
        write_file_atomic(out_dir / (prefix + "_min_gap.csv"), b.str());
    }
}

/// Long-format fan chart: one row per month and level.
inline void write_bands_csv(const std::filesystem::path &path, const InflationRun &run,
                            const CoverageGrid &grid, const std::string &method) {
    CsvBuilder b;
    b.field("date").field("method").field("alpha").field("yhat").field("lo").field("hi")
        .field("err").endrow();
    for (std::size_t t = 0; t < run.records.size(); ++t) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const Interval band =
                prediction_interval(run.forecasts[t], std::max(0.0, run.records[t].q[i]));
            b.field(run.months[t].str()).field(method).field(grid.alpha(i))
                .field(run.forecasts[t]).field(band.lo).field(band.hi)
                .field(static_cast<std::int64_t>(run.records[t].err[i])).endrow();
        }
    }
    write_file_atomic(path, b.str());
}

inline void write_walk_csv(const std::filesystem::path &path, const WalkPath &walk,
                           const WalkConfig &wc, const CoverageGrid &grid) {
    CsvBuilder b;
    b.field("t").field("z").field("s");
    for (std::size_t i = 1; i <= grid.size(); ++i)
        b.field("qstar_" + std::to_string(i));
    b.endrow();
    for (std::size_t t = 0; t < walk.z.size(); ++t) {
        b.field(t + 1).field(walk.z[t]).field(walk.s[t]);
        for (double q : true_quantiles(walk.z[t], wc, grid))
            b.field(q);
        b.endrow();
    }
    write_file_atomic(path, b.str());
}

/// Everything summary.csv needs about one completed (method, seed) task.
struct TaskResult {
    std::string method;
    std::optional<std::uint64_t> seed; // empty for inflation
    std::int64_t steps = 0;
    RunMetrics metrics;
    std::optional<RegretReport> regret;
    std::int64_t clamp_warnings = 0;
    std::int64_t ridge_fallbacks = 0;
};

namespace detail {

inline double series_min(const std::vector<double> &v) {
    double mn = std::numeric_limits<double>::infinity();
    for (double x : v)
        mn = std::min(mn, x);
    return mn;
}

inline double mean(const std::vector<double> &v) {
    double s = 0.0;
    for (double x : v)
        s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

} // namespace detail

inline void write_summary_csv(const std::filesystem::path &path,
                              const std::vector<TaskResult> &results,
                              ExperimentKind experiment) {
    CsvBuilder b;
    b.field("experiment").field("method").field("seed").field("steps").field("ce_max")
        .field("ce_mean").field("final_l1").field("violations").field("min_gap_min")
        .field("clamp_warnings").field("ridge_fallbacks").field("loss_regret")
        .field("lemma_rhs").field("lemma_holds").field("path_w").field("path_q")
        .field("quantile_err_mean").field("theorem_rhs").field("theorem_holds")
        .field("support_exits").endrow();
    const std::string kind =
        experiment == ExperimentKind::synthetic ? "synthetic" : "inflation";
    for (const TaskResult &r : results) {
        double ce_max = 0.0;
        for (double c : r.metrics.ce)
            ce_max = std::max(ce_max, c);
        b.field(kind).field(r.method);
        b.field(r.seed ? std::to_string(*r.seed) : std::string());
        b.field(r.steps).field(ce_max).field(detail::mean(r.metrics.ce));
        b.field(r.metrics.l1_rolling.empty() ? std::string()
                                             : format_double(r.metrics.l1_rolling.back()));
        b.field(r.metrics.violations);
        b.field(r.metrics.min_gap.empty() ? std::string()
                                          : format_double(detail::series_min(r.metrics.min_gap)));
        b.field(r.clamp_warnings).field(r.ridge_fallbacks);
        if (r.regret) {
            const double t = static_cast<double>(r.steps);
            b.field(r.regret->loss_regret).field(r.regret->lemma_rhs);
            b.field(static_cast<std::int64_t>(r.regret->lemma_holds ? 1 : 0));
            b.field(r.regret->path_w).field(r.regret->path_q);
            b.field(r.regret->quantile_error_sum / t).field(r.regret->theorem_rhs);
            b.field(static_cast<std::int64_t>(r.regret->theorem_holds ? 1 : 0));
            b.field(r.regret->support_exits);
        } else {
            for (int i = 0; i < 9; ++i)
                b.field(std::string());
        }
        b.endrow();
    }
    write_file_atomic(path, b.str());
}

/// Worker-pool width: hardware concurrency capped by the task count and by
/// NESTED_CONFORMAL_THREADS when set.
inline std::size_t worker_count(std::size_t task_count) {
    std::size_t n = std::thread::hardware_concurrency();
    if (n == 0)
        n = 1;
    if (const char *env = std::getenv("NESTED_CONFORMAL_THREADS")) {
        char *end = nullptr;
        const long long cap = std::strtoll(env, &end, 10);
        if (end == env || *end != '\0' || cap < 1)
            throw ConfigError("NESTED_CONFORMAL_THREADS must be a positive integer, got '" +
                              std::string(env) + "'");
        n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
    }
    return std::max<std::size_t>(1, std::min(n, task_count));
}

/// Runs every (method x seed) task, writes per-run records and metrics
/// plus one summary.csv, and returns the in-memory results in task order.
/// Tasks are independent; the pool only shares the atomic task index.
inline std::vector<TaskResult> run_experiment(const ExperimentConfig &cfg) {
    const std::vector<std::string> violations = validate(cfg);
    if (!violations.empty()) {
        std::string msg = "invalid config:";
        for (const auto &v : violations)
            msg += "\n  " + v;
        throw ConfigError(msg);
    }
    const std::filesystem::path out_dir(cfg.out_dir);
    {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec)
            throw IoError("cannot create out_dir " + out_dir.string() + ": " + ec.message());
    }
    const CoverageGrid grid = cfg.grid();
    const bool synth = cfg.experiment == ExperimentKind::synthetic;

    std::optional<MonthlySeries> series;
    if (!synth)
        series = load_fred_csv(cfg.data_path, cfg.value_column);

    if (synth && cfg.dump_walk) {
        for (std::uint64_t seed : cfg.seeds) {
            WalkConfig wc = cfg.walk;
            wc.seed = seed;
            write_walk_csv(out_dir / ("walk_s" + std::to_string(seed) + ".csv"),
                           generate_walk(wc), wc, grid);
        }
    }

    struct Task {
        Method method;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (Method m : cfg.methods) {
        if (synth)
            for (std::uint64_t seed : cfg.seeds)
                tasks.push_back({m, seed});
        else
            tasks.push_back({m, 0});
    }

    std::vector<TaskResult> results(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());
    std::atomic<std::size_t> next{0};

    auto work = [&]() {
        while (true) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= tasks.size())
                return;
            try {
                const Task &task = tasks[idx];
                TaskResult res;
                res.method = method_name(task.method);
                if (synth) {
                    res.seed = task.seed;
                    SyntheticRun run = run_one_synthetic(cfg, task.method, task.seed);
                    res.steps = static_cast<std::int64_t>(run.records.size());
                    res.clamp_warnings = run.clamp_warnings;
                    res.metrics = compute_run_metrics(run.records, grid, cfg.dt);
                    if (task.method == Method::eg || task.method == Method::pg)
                        res.regret =
                            regret_and_bounds(run.records, cfg.estimator(task.method),
                                              1.0 / cfg.walk.width_u, cfg.walk.width_u / 2.0);
                    const std::string stem =
                        std::string(res.method) + "_s" + std::to_string(task.seed);
                    write_records_csv(out_dir / ("records_" + stem + ".csv"), run.records);
                    write_metric_csvs(out_dir, "metrics_" + stem, res.metrics);
                } else {
                    InflationOptions opts;
                    opts.window = cfg.window;
                    opts.window_counts_total = cfg.window_counts_total;
                    InflationRun run =
                        run_inflation_experiment(*series, cfg.estimator(task.method), opts);
                    res.steps = static_cast<std::int64_t>(run.records.size());
                    res.clamp_warnings = run.clamp_warnings;
                    res.ridge_fallbacks = run.ridge_fallbacks;
                    res.metrics = compute_run_metrics(run.records, grid, cfg.dt);
                    write_records_csv(out_dir / ("records_" + res.method + ".csv"),
                                      run.records);
                    write_bands_csv(out_dir / ("bands_" + res.method + ".csv"), run, grid,
                                    res.method);
                    write_metric_csvs(out_dir, "metrics_" + res.method, res.metrics);
                }
                results[idx] = std::move(res);
            } catch (...) {
                errors[idx] = std::current_exception();
            }
        }
    };

    const std::size_t workers = worker_count(tasks.size());
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i)
            pool.emplace_back(work);
        for (auto &th : pool)
            th.join();
    }
    for (const auto &err : errors)
        if (err)
            std::rethrow_exception(err);

    write_summary_csv(out_dir / "summary.csv", results, cfg.experiment);
    return results;
}

} // namespace ncp
