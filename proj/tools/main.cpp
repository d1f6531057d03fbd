#include "CLI11.hpp"

#include "ncp/ncp.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace {

struct RunFlags {
    std::string config;
    std::string out;
    std::string methods;
    std::string levels;
    std::string seeds;
    std::string data;
    std::string value_column;
    double eta = 0.0;
    double mu = 0.0;
    std::int64_t dt = 0;
    std::int64_t window = 0;
    std::int64_t horizon = 0;
    bool dump_walk = false;
};

ncp::ExperimentConfig load_config(const std::string &path,
                                  std::optional<ncp::ExperimentKind> kind) {
    const ncp::ConfigMap cm = path.empty() ? ncp::ConfigMap::from_string("", "<defaults>")
                                           : ncp::ConfigMap::from_file(path);
    return ncp::build_experiment_config(cm, kind);
}

void apply_overrides(ncp::ExperimentConfig &cfg, const RunFlags &f, const CLI::App &cmd) {
    // Not every subcommand registers every flag; only consume the ones
    // that exist and were actually passed.
    const auto given = [&cmd](const char *name) {
        const CLI::Option *opt = cmd.get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    if (given("--out"))
        cfg.out_dir = f.out;
    if (given("--methods"))
        cfg.methods = ncp::parse_method_list(f.methods);
    if (given("--levels"))
        cfg.alphas = ncp::parse_levels(f.levels);
    if (given("--seeds"))
        cfg.seeds = ncp::parse_seed_list(f.seeds);
    if (given("--eta"))
        cfg.eta_all = f.eta;
    if (given("--mu"))
        cfg.mu = f.mu;
    if (given("--dt"))
        cfg.dt = f.dt;
    if (given("--horizon"))
        cfg.walk.horizon = f.horizon;
    if (given("--dump-walk"))
        cfg.dump_walk = true;
    if (given("--data"))
        cfg.data_path = f.data;
    if (given("--value-column"))
        cfg.value_column = f.value_column;
    if (given("--window"))
        cfg.window = f.window;
}

void print_results(const std::vector<ncp::TaskResult> &results, const std::string &out_dir) {
    for (const ncp::TaskResult &r : results) {
        double ce_max = 0.0;
        for (double c : r.metrics.ce)
            ce_max = std::max(ce_max, c);
        std::printf("%-12s", r.method.c_str());
        if (r.seed)
            std::printf(" seed=%llu", static_cast<unsigned long long>(*r.seed));
        std::printf(" steps=%lld ce_max=%.4f violations=%lld",
                    static_cast<long long>(r.steps), ce_max,
                    static_cast<long long>(r.metrics.violations));
        if (r.regret)
            std::printf(" lemma=%s", r.regret->lemma_holds ? "ok" : "VIOLATED");
        if (r.clamp_warnings)
            std::printf(" clamped=%lld", static_cast<long long>(r.clamp_warnings));
        if (r.ridge_fallbacks)
            std::printf(" ridge=%lld", static_cast<long long>(r.ridge_fallbacks));
        std::printf("\n");
    }
    std::printf("wrote %s\n", out_dir.c_str());
}

int run_validate(const std::string &config_path) {
    const ncp::ExperimentConfig cfg = load_config(config_path, {});
    const std::vector<std::string> violations = ncp::validate(cfg);
    if (violations.empty()) {
        std::printf("%s: ok\n", config_path.c_str());
        return 0;
    }
    for (const std::string &v : violations)
        std::printf("%s\n", v.c_str());
    return 2;
}

int run_metrics(const std::string &records_path, const std::string &config_path,
                const std::string &levels, bool has_dt, std::int64_t dt,
                const std::string &out, std::string prefix) {
    ncp::ExperimentConfig cfg = load_config(config_path, {});
    if (!levels.empty())
        cfg.alphas = ncp::parse_levels(levels);
    if (has_dt)
        cfg.dt = dt;

    const std::vector<ncp::StepRecord> records = ncp::read_records_csv(records_path);
    const ncp::CoverageGrid grid = cfg.grid();
    if (records.front().q.size() != grid.size())
        throw ncp::ConfigError("records carry " + std::to_string(records.front().q.size()) +
                               " levels but the grid has " + std::to_string(grid.size()) +
                               " (pass the run's --config or --levels)");
    if (prefix.empty())
        prefix = std::filesystem::path(records_path).stem().string();

    const ncp::RunMetrics m = ncp::compute_run_metrics(records, grid, cfg.dt);
    ncp::write_metric_csvs(out, prefix, m);
    double ce_max = 0.0;
    for (double c : m.ce)
        ce_max = std::max(ce_max, c);
    std::printf("%s: steps=%zu levels=%zu ce_max=%.4f violations=%lld\n", records_path.c_str(),
                records.size(), grid.size(), ce_max, static_cast<long long>(m.violations));
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Online conformal prediction across jointly nested coverage levels"};
    app.require_subcommand(1);

    RunFlags sim;
    CLI::App *simulate = app.add_subcommand("simulate", "Run the reflected-walk experiment");
    simulate->add_option("--config", sim.config, "Config file (key = value lines)");
    simulate->add_option("--out", sim.out, "Output directory");
    simulate->add_option("--methods", sim.methods, "Comma list: eg,pg,tracker,tracker-proj");
    simulate->add_option("--levels", sim.levels, "start:stop:step or a comma list");
    simulate->add_option("--seeds,--seed", sim.seeds, "Comma list of walk seeds");
    simulate->add_option("--eta", sim.eta, "Step size for every method");
    simulate->add_option("--mu", sim.mu, "Simplex floor for eg");
    simulate->add_option("--dt", sim.dt, "Rolling metric window");
    simulate->add_option("--horizon", sim.horizon, "Walk length T");
    simulate->add_flag("--dump-walk", sim.dump_walk, "Also write walk_s<seed>.csv");

    RunFlags infl;
    CLI::App *inflation = app.add_subcommand("inflation", "Run the CPI forecasting experiment");
    inflation->add_option("--config", infl.config, "Config file (key = value lines)");
    inflation->add_option("--out", infl.out, "Output directory");
    inflation->add_option("--methods", infl.methods, "Comma list: eg,pg,tracker,tracker-proj");
    inflation->add_option("--levels", infl.levels, "start:stop:step or a comma list");
    inflation->add_option("--eta", infl.eta, "Step size for every method");
    inflation->add_option("--mu", infl.mu, "Simplex floor for eg");
    inflation->add_option("--dt", infl.dt, "Rolling metric window");
    inflation->add_option("--data", infl.data, "FRED-style CPI csv");
    inflation->add_option("--value-column", infl.value_column, "Value column name");
    inflation->add_option("--window", infl.window, "Regression targets per AR(3) fit");

    std::string vconfig;
    CLI::App *validate_cmd =
        app.add_subcommand("validate", "Check a config file and print violations");
    validate_cmd->add_option("--config", vconfig, "Config file")->required();

    std::string mrecords, mconfig, mlevels, mprefix, mout = "out";
    std::int64_t mdt = 0;
    CLI::App *metrics_cmd =
        app.add_subcommand("metrics", "Recompute metric files from a records CSV");
    metrics_cmd->add_option("--records", mrecords, "records_*.csv from a finished run")
        ->required();
    metrics_cmd->add_option("--config", mconfig, "Config file the run used");
    metrics_cmd->add_option("--levels", mlevels, "Levels override");
    metrics_cmd->add_option("--dt", mdt, "Rolling metric window");
    metrics_cmd->add_option("--out", mout, "Output directory");
    metrics_cmd->add_option("--prefix", mprefix, "Output file prefix (default: records stem)");

    try {
        app.parse(argc, argv);
        if (app.got_subcommand(simulate)) {
            ncp::ExperimentConfig cfg = load_config(sim.config, ncp::ExperimentKind::synthetic);
            apply_overrides(cfg, sim, *simulate);
            print_results(ncp::run_experiment(cfg), cfg.out_dir);
            return 0;
        }
        if (app.got_subcommand(inflation)) {
            ncp::ExperimentConfig cfg = load_config(infl.config, ncp::ExperimentKind::inflation);
            apply_overrides(cfg, infl, *inflation);
            print_results(ncp::run_experiment(cfg), cfg.out_dir);
            return 0;
        }
        if (app.got_subcommand(validate_cmd))
            return run_validate(vconfig);
        if (app.got_subcommand(metrics_cmd))
            return run_metrics(mrecords, mconfig, mlevels, metrics_cmd->count("--dt") != 0, mdt,
                               mout, mprefix);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ncp::ConfigError &e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ncp::IoError &e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    } catch (const ncp::DataError &e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 4;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
