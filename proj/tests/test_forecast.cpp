#include <catch2/catch_amalgamated.hpp>

#include "ncp/csv.hpp"
#include "ncp/errors.hpp"
#include "ncp/estimators.hpp"
#include "ncp/forecast.hpp"
#include "ncp/rng.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

using namespace ncp;

namespace {

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string &name, const std::string &content)
        : path(std::filesystem::temp_directory_path() / name) {
        write_file_atomic(path, content);
    }
    ~TempFile() {
        std::error_code ec;
        std::filesystem::remove(path, ec);
    }
};

/// CPI with steady growth plus a deterministic seasonal wiggle, so the
/// yearly rates move around and the AR design stays well conditioned.
MonthlySeries wiggly_cpi(std::size_t n) {
    MonthlySeries s;
    Month m{1990, 1};
    double level = 100.0;
    for (std::size_t i = 0; i < n; ++i) {
        s.months.push_back(m);
        s.values.push_back(level * (1.0 + 0.01 * std::sin(0.7 * static_cast<double>(i))));
        level *= 1.0025;
        m = m.plus_months(1);
    }
    return s;
}

EstimatorConfig inflation_cfg(Method m) {
    return EstimatorConfig::with_defaults(m, CoverageGrid::evenly_spaced(3, 0.25));
}

} // namespace

TEST_CASE("month parsing and arithmetic") {
    REQUIRE(parse_month("1950-01-01") == Month{1950, 1});
    REQUIRE(parse_month("2024-12") == Month{2024, 12});
    REQUIRE_THROWS_AS(parse_month("CPI"), DataError);
    REQUIRE_THROWS_AS(parse_month("1950-13-01"), DataError);
    REQUIRE(Month{1999, 12}.plus_months(1) == Month{2000, 1});
    REQUIRE(Month{2000, 3}.plus_months(-4) == Month{1999, 11});
    REQUIRE(Month{1950, 7}.str() == "1950-07");
}

TEST_CASE("monthly validation names the gap it found") {
    MonthlySeries s;
    s.months = {Month{1950, 1}, Month{1950, 3}};
    s.values = {100.0, 101.0};
    REQUIRE_THROWS_WITH(validate_monthly(s, true),
                        Catch::Matchers::ContainsSubstring("1950-02"));
    s.months[1] = Month{1950, 2};
    s.values[1] = -1.0;
    REQUIRE_THROWS_AS(validate_monthly(s, true), DataError);
    REQUIRE_NOTHROW(validate_monthly(s, false));
}

TEST_CASE("FRED CSV loading") {
    TempFile good("ncp_good.csv",
                  "DATE,CPIAUCSL\n1950-01-01,100.0\n1950-02-01,100.5\n1950-03-01,101.2\n");
    const MonthlySeries s = load_fred_csv(good.path);
    REQUIRE(s.values == std::vector<double>{100.0, 100.5, 101.2});
    REQUIRE(s.months.front() == Month{1950, 1});

    TempFile nodate("ncp_nodate.csv", "WHEN,CPIAUCSL\n1950-01-01,100.0\n");
    REQUIRE_THROWS_AS(load_fred_csv(nodate.path), DataError);

    TempFile nocol("ncp_nocol.csv", "DATE,OTHER\n1950-01-01,100.0\n");
    REQUIRE_THROWS_WITH(load_fred_csv(nocol.path),
                        Catch::Matchers::ContainsSubstring("CPIAUCSL"));
    REQUIRE_NOTHROW(load_fred_csv(nocol.path, "OTHER"));

    TempFile badnum("ncp_badnum.csv", "DATE,CPIAUCSL\n1950-01-01,100.0\n1950-02-01,n/a\n");
    REQUIRE_THROWS_WITH(load_fred_csv(badnum.path),
                        Catch::Matchers::ContainsSubstring("row 3"));

    REQUIRE_THROWS_AS(load_fred_csv("/nonexistent/definitely_missing.csv"), IoError);
}

TEST_CASE("year-over-year rates") {
    MonthlySeries s;
    Month m{1950, 1};
    for (int i = 0; i < 15; ++i) {
        s.months.push_back(m);
        m = m.plus_months(1);
    }
    s.values = {100, 100, 100, 100, 100, 100, 100, 100, 100, 100, 100, 100, 110, 100, 99};
    const MonthlySeries y = yearly_inflation(s);
    REQUIRE(y.values.size() == 3);
    REQUIRE(y.months.front() == Month{1951, 1});
    REQUIRE(y.values[0] == Catch::Approx(0.10).margin(1e-15));
    REQUIRE(y.values[1] == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(y.values[2] == Catch::Approx(-0.01).margin(1e-15));

    s.months.resize(12);
    s.values.resize(12);
    REQUIRE_THROWS_AS(yearly_inflation(s), DataError);
}

TEST_CASE("AR(3) recovery on noiseless recurrences") {
    // persistent AR(1)-style recurrence seen through the AR(3) fit
    std::vector<double> slow{0.9, 0.1, 0.8};
    for (int t = 3; t < 40; ++t)
        slow.push_back(0.1 + 0.5 * slow[t - 1]);
    ARModel m1 = fit_ar3(slow);
    REQUIRE_FALSE(m1.ridge_fallback);
    REQUIRE(m1.window == 37);
    REQUIRE(m1.beta[0] == Catch::Approx(0.1).margin(1e-6));
    REQUIRE(m1.beta[1] == Catch::Approx(0.5).margin(1e-6));
    REQUIRE(m1.beta[2] == Catch::Approx(0.0).margin(1e-6));
    REQUIRE(m1.beta[3] == Catch::Approx(0.0).margin(1e-6));

    // oscillatory dynamics excite all three lags
    std::vector<double> osc{0.2, -0.4, 0.7};
    for (int t = 3; t < 60; ++t)
        osc.push_back(0.05 + 0.6 * osc[t - 1] - 0.4 * osc[t - 2] + 0.2 * osc[t - 3]);
    ARModel m2 = fit_ar3(osc);
    REQUIRE_FALSE(m2.ridge_fallback);
    REQUIRE(m2.beta[0] == Catch::Approx(0.05).margin(1e-8));
    REQUIRE(m2.beta[1] == Catch::Approx(0.6).margin(1e-8));
    REQUIRE(m2.beta[2] == Catch::Approx(-0.4).margin(1e-8));
    REQUIRE(m2.beta[3] == Catch::Approx(0.2).margin(1e-8));

    REQUIRE_THROWS_AS(fit_ar3(std::vector<double>{1.0, 2.0, 3.0}), DataError);
}

TEST_CASE("constant windows fall back to ridge and still predict the constant") {
    const std::vector<double> flat(40, 0.03);
    const ARModel m = fit_ar3(flat);
    REQUIRE(m.ridge_fallback);
    REQUIRE(one_step_forecast(m, 0.03, 0.03, 0.03) == Catch::Approx(0.03).margin(1e-8));
}

TEST_CASE("OLS residuals are orthogonal to the design") {
    std::vector<double> y{0.4, -0.2, 0.6};
    std::uint64_t state = 99;
    for (int t = 3; t < 80; ++t) {
        const double noise =
            (static_cast<double>(splitmix64(state) >> 11) * 0x1p-53 - 0.5) * 0.2;
        y.push_back(0.02 + 0.5 * y[t - 1] - 0.3 * y[t - 2] + 0.1 * y[t - 3] + noise);
    }
    const ARModel m = fit_ar3(y);
    double dot[4] = {0, 0, 0, 0};
    double scale = 0.0;
    for (std::size_t t = 3; t < y.size(); ++t) {
        const double x[4] = {1.0, y[t - 1], y[t - 2], y[t - 3]};
        const double r =
            y[t] - (m.beta[0] + m.beta[1] * x[1] + m.beta[2] * x[2] + m.beta[3] * x[3]);
        for (int i = 0; i < 4; ++i) {
            dot[i] += x[i] * r;
            scale += std::abs(x[i] * r);
        }
    }
    for (int i = 0; i < 4; ++i)
        REQUIRE(std::abs(dot[i]) <= 1e-8 * std::max(1.0, scale));
}

TEST_CASE("one-step forecast applies the coefficients to the newest lags") {
    ARModel m;
    m.beta = {0.1, 0.5, 0.0, 0.0};
    REQUIRE(one_step_forecast(m, 0.3, 9.0, -4.0) == Catch::Approx(0.25).margin(1e-15));
    m.beta = {0.0, 1.0, 2.0, 3.0};
    REQUIRE(one_step_forecast(m, 1.0, 2.0, 3.0) == Catch::Approx(14.0).margin(1e-15));
}

TEST_CASE("rolling experiment aligns months, windows, and records") {
    const MonthlySeries cpi = wiggly_cpi(120);
    InflationOptions opt;
    opt.window = 12;
    const InflationRun run = run_inflation_experiment(cpi, inflation_cfg(Method::pg), opt);
    REQUIRE(run.rates.values.size() == 108);
    REQUIRE(run.records.size() == 108 - 15); // first = targets + 3 lags
    REQUIRE(run.months.front() == run.rates.months[15]);
    REQUIRE(run.months.size() == run.records.size());
    REQUIRE(run.actuals.size() == run.records.size());
    for (std::size_t i = 0; i < run.records.size(); ++i) {
        REQUIRE(run.records[i].q.size() == 3);
        REQUIRE(run.records[i].score ==
                Catch::Approx(std::abs(run.actuals[i] - run.forecasts[i])).margin(1e-15));
    }

    // window_counts_total shifts the interpretation by the three lags
    InflationOptions total;
    total.window = 15;
    total.window_counts_total = true;
    const InflationRun run2 = run_inflation_experiment(cpi, inflation_cfg(Method::pg), total);
    REQUIRE(run2.months.front() == run.months.front());
    REQUIRE(run2.records.size() == run.records.size());

    InflationOptions bad;
    bad.window = 0;
    REQUIRE_THROWS_AS(run_inflation_experiment(cpi, inflation_cfg(Method::pg), bad), ConfigError);
    bad.window = 3;
    bad.window_counts_total = true;
    REQUIRE_THROWS_AS(run_inflation_experiment(cpi, inflation_cfg(Method::pg), bad), ConfigError);

    const MonthlySeries tiny = wiggly_cpi(20);
    InflationOptions opt2;
    opt2.window = 12;
    REQUIRE_THROWS_AS(run_inflation_experiment(tiny, inflation_cfg(Method::pg), opt2), DataError);
}

TEST_CASE("a perfect forecaster drives every threshold toward zero") {
    const MonthlySeries cpi = wiggly_cpi(160);
    const MonthlySeries rates = yearly_inflation(cpi);
    InflationOptions opt;
    opt.window = 12;
    opt.forecast_override = [&rates](std::size_t idx, double) { return rates.values[idx]; };

    // Additive updates walk linearly toward zero. The multiplicative method
    // decays exponentially and strictly downhill every step; with every
    // score covered its gradient is constant and no weight reaches the
    // floor here, so the whole trajectory has a closed form.
    for (Method m : {Method::eg, Method::pg, Method::projected_tracker}) {
        const EstimatorConfig cfg = inflation_cfg(m);
        const InflationRun run = run_inflation_experiment(cpi, cfg, opt);
        for (const StepRecord &rec : run.records)
            for (std::uint8_t e : rec.err)
                REQUIRE(e == 0); // zero scores are always covered
        const StepRecord &last = run.records.back();
        if (m == Method::eg) {
            for (std::size_t t = 1; t < run.records.size(); ++t)
                REQUIRE(run.records[t].q[0] < run.records[t - 1].q[0]);
            const double b = cfg.grid.score_bound();
            const double updates = static_cast<double>(run.records.size()) - 1.0;
            const std::size_t n = cfg.grid.size() + 1;
            double znorm = 0.0, prefix = 0.0, w0 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j > 0)
                    prefix += cfg.grid.alpha(j - 1);
                const double wj = std::exp(-cfg.eta * b * prefix * updates) /
                                  static_cast<double>(n);
                REQUIRE(wj > cfg.mu); // closed form only valid off the floor
                znorm += wj;
                if (j == 0)
                    w0 = wj;
            }
            REQUIRE(last.q[0] == Catch::Approx(b * (1.0 - w0 / znorm)).margin(1e-9));
        } else {
            REQUIRE(last.q[0] < 0.25 * run.records.front().q[0]);
        }
    }

    // the unconstrained tracker oscillates within one step of zero
    const EstimatorConfig ind = inflation_cfg(Method::independent);
    const InflationRun run = run_inflation_experiment(cpi, ind, opt);
    for (double q : run.records.back().q)
        REQUIRE(std::abs(q) <= 2.0 * ind.eta);
}

TEST_CASE("forecasts never look at the month being predicted") {
    MonthlySeries cpi = wiggly_cpi(140);
    InflationOptions opt;
    opt.window = 12;
    const InflationRun base = run_inflation_experiment(cpi, inflation_cfg(Method::eg), opt);

    MonthlySeries bumped = cpi;
    bumped.values.back() *= 1.05; // only the final rate changes
    const InflationRun alt = run_inflation_experiment(bumped, inflation_cfg(Method::eg), opt);

    REQUIRE(alt.forecasts == base.forecasts);
    for (std::size_t i = 0; i + 1 < base.actuals.size(); ++i)
        REQUIRE(alt.actuals[i] == base.actuals[i]);
    REQUIRE(alt.actuals.back() != base.actuals.back());
    for (std::size_t i = 0; i < base.records.size(); ++i)
        REQUIRE(alt.records[i].q == base.records[i].q);
    REQUIRE(alt.records.back().score != base.records.back().score);
}

TEST_CASE("a geometric price level produces constant rates and ridge fits") {
    MonthlySeries cpi;
    Month m{1980, 1};
    double level = 100.0;
    for (int i = 0; i < 100; ++i) {
        cpi.months.push_back(m);
        cpi.values.push_back(level);
        level *= 1.003;
        m = m.plus_months(1);
    }
    InflationOptions opt;
    opt.window = 12;
    const InflationRun run = run_inflation_experiment(cpi, inflation_cfg(Method::pg), opt);
    REQUIRE(run.ridge_fallbacks == static_cast<std::int64_t>(run.records.size()));
    const double rate = std::pow(1.003, 12) - 1.0;
    for (double f : run.forecasts)
        REQUIRE(f == Catch::Approx(rate).margin(1e-6));
}
