#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ncp/core.hpp"
#include "ncp/csv.hpp"
#include "ncp/errors.hpp"
#include "ncp/estimators.hpp"

namespace ncp {

/// Calendar month. Comparisons and gap checks go through the linear index.
struct Month {
    int year = 1900;
    int month = 1; // 1..12

    std::int64_t index() const { return static_cast<std::int64_t>(year) * 12 + (month - 1); }

    Month plus_months(std::int64_t n) const {
        const std::int64_t idx = index() + n;
        Month m;
        m.year = static_cast<int>(idx / 12);
        m.month = static_cast<int>(idx % 12) + 1;
        return m;
    }

    std::string str() const {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
        return std::string(buf);
    }
};

inline bool operator==(const Month &a, const Month &b) { return a.index() == b.index(); }

/// ISO date YYYY-MM-DD (or bare YYYY-MM); the day is accepted and ignored
/// since the series is monthly.
inline Month parse_month(const std::string &text) {
    int y = 0, m = 0, d = 1;
    const int got = std::sscanf(text.c_str(), "%d-%d-%d", &y, &m, &d);
    if (got < 2 || y < 1 || m < 1 || m > 12 || d < 1 || d > 31)
        throw DataError("bad date '" + text + "' (expected YYYY-MM-DD)");
    return Month{y, m};
}

/// A gapless monthly series. values[i] belongs to months[i].
struct MonthlySeries {
    std::vector<Month> months;
    std::vector<double> values;
};

/// Contiguity and positivity; every loader and transform funnels through
/// this so downstream code can index months arithmetically.
inline void validate_monthly(const MonthlySeries &series, bool require_positive) {
    if (series.months.size() != series.values.size())
        throw DataError("monthly series: dates and values differ in length");
    for (std::size_t i = 0; i < series.months.size(); ++i) {
        if (i > 0) {
            const Month expected = series.months[i - 1].plus_months(1);
            if (!(series.months[i] == expected))
                throw DataError("monthly gap: expected " + expected.str() + " after " +
                                series.months[i - 1].str() + ", got " + series.months[i].str());
        }
        if (!std::isfinite(series.values[i]) || (require_positive && series.values[i] <= 0.0))
            throw DataError("bad value for " + series.months[i].str());
    }
}

/// FRED-style CSV: header row, DATE column plus the named value column.
inline MonthlySeries load_fred_csv(const std::filesystem::path &path,
                                   const std::string &value_column = "CPIAUCSL") {
    const auto rows = read_csv(path);
    if (rows.empty())
        throw DataError(path.string() + ": empty file");
    const auto &header = rows.front();
    std::size_t date_col = header.size(), value_col = header.size();
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == "DATE" || header[j] == "date" || header[j] == "observation_date")
            date_col = j;
        if (header[j] == value_column)
            value_col = j;
    }
    if (date_col == header.size())
        throw DataError(path.string() + ": no DATE column in header");
    if (value_col == header.size())
        throw DataError(path.string() + ": no '" + value_column + "' column in header");

    MonthlySeries series;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto &row = rows[r];
        if (row.size() <= std::max(date_col, value_col))
            throw DataError(path.string() + ": row " + std::to_string(r + 1) + " is short");
        series.months.push_back(parse_month(row[date_col]));
        char *end = nullptr;
        const std::string &cell = row[value_col];
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0')
            throw DataError(path.string() + ": row " + std::to_string(r + 1) +
                            " has non-numeric value '" + cell + "'");
        series.values.push_back(v);
    }
    validate_monthly(series, true);
    return series;
}

/// Year-over-year rate y_t = (CPI_t - CPI_{t-12}) / CPI_{t-12}. The output
/// starts 12 months after the input start.
inline MonthlySeries yearly_inflation(const MonthlySeries &series) {
    validate_monthly(series, true);
    if (series.values.size() < 13)
        throw DataError("yearly_inflation: need at least 13 months of data");
    MonthlySeries out;
    for (std::size_t i = 12; i < series.values.size(); ++i) {
        out.months.push_back(series.months[i]);
        out.values.push_back((series.values[i] - series.values[i - 12]) / series.values[i - 12]);
    }
    return out;
}

/// AR(3) with intercept: y_t = b0 + b1 y_{t-1} + b2 y_{t-2} + b3 y_{t-3}.
struct ARModel {
    std::array<double, 4> beta{0.0, 0.0, 0.0, 0.0};
    std::int64_t window = 0;      // number of regression targets
    bool ridge_fallback = false;  // normal equations were regularized
};

namespace detail {

/// In-place solve of a 4x4 system by Gaussian elimination with partial
/// pivoting. Returns false when a pivot collapses relative to the matrix
/// scale, signalling rank deficiency to the caller.
inline bool solve_linear4(std::array<std::array<double, 4>, 4> a, std::array<double, 4> rhs,
                          std::array<double, 4> &out) {
    double scale = 0.0;
    for (const auto &row : a)
        for (double v : row)
            scale = std::max(scale, std::abs(v));
    if (scale == 0.0)
        return false;
    const double tol = 1e-12 * scale;

    std::array<int, 4> perm{0, 1, 2, 3};
    for (int col = 0; col < 4; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 4; ++r)
            if (std::abs(a[perm[r]][col]) > std::abs(a[perm[pivot]][col]))
                pivot = r;
        std::swap(perm[col], perm[pivot]);
        const double p = a[perm[col]][col];
        if (std::abs(p) < tol)
            return false;
        for (int r = col + 1; r < 4; ++r) {
            const double f = a[perm[r]][col] / p;
            if (f == 0.0)
                continue;
            for (int c = col; c < 4; ++c)
                a[perm[r]][c] -= f * a[perm[col]][c];
            rhs[perm[r]] -= f * rhs[perm[col]];
        }
    }
    for (int col = 3; col >= 0; --col) {
        double v = rhs[perm[col]];
        for (int c = col + 1; c < 4; ++c)
            v -= a[perm[col]][c] * out[c];
        out[col] = v / a[perm[col]][col];
    }
    return true;
}

} // namespace detail

/// OLS via the 4x4 normal equations. window_data holds consecutive rates;
/// rows pair each y_t (t >= 3) with its three lags. A rank-deficient
/// design falls back to ridge with lambda = 1e-8 instead of aborting.
inline ARModel fit_ar3(const std::vector<double> &window_data) {
    if (window_data.size() < 4)
        throw DataError("fit_ar3: need at least 4 observations (3 lags + 1 target)");
    std::array<std::array<double, 4>, 4> a{};
    std::array<double, 4> rhs{};
    for (std::size_t t = 3; t < window_data.size(); ++t) {
        const std::array<double, 4> x{1.0, window_data[t - 1], window_data[t - 2],
                                      window_data[t - 3]};
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j)
                a[i][j] += x[i] * x[j];
            rhs[i] += x[i] * window_data[t];
        }
    }

    ARModel model;
    model.window = static_cast<std::int64_t>(window_data.size()) - 3;
    if (!detail::solve_linear4(a, rhs, model.beta)) {
        constexpr double lambda = 1e-8;
        for (int i = 0; i < 4; ++i)
            a[i][i] += lambda;
        model.ridge_fallback = true;
        if (!detail::solve_linear4(a, rhs, model.beta))
            throw DataError("fit_ar3: normal equations unsolvable even with ridge");
    }
    return model;
}

/// ARModel applied to the three most recent rates, newest first.
inline double one_step_forecast(const ARModel &model, double y1, double y2, double y3) {
    return model.beta[0] + model.beta[1] * y1 + model.beta[2] * y2 + model.beta[3] * y3;
}

struct InflationOptions {
    std::int64_t window = 60;          // regression targets per fit
    bool window_counts_total = false;  // reinterpret window as lags+targets
    // Test hook: replaces the AR forecast; takes the index into the rate
    // series and the model's own forecast.
    std::function<double(std::size_t, double)> forecast_override;
};

/// One month of the pipeline output next to its estimator record.
struct InflationRun {
    MonthlySeries rates;
    std::vector<Month> months;        // month per record
    std::vector<double> actuals;      // y_t per record
    std::vector<double> forecasts;    // yhat_t per record
    std::vector<StepRecord> records;
    std::int64_t ridge_fallbacks = 0;
    std::int64_t clamp_warnings = 0;
};

/// Rolling protocol: for each month with a full trailing window, fit on
/// data strictly before it, forecast, score the realized rate, and feed
/// the estimator. The records carry the thresholds deployed before each
/// observation arrived.
inline InflationRun run_inflation_experiment(const MonthlySeries &series,
                                             const EstimatorConfig &est_cfg,
                                             const InflationOptions &options = {}) {
    if (options.window < 1)
        throw ConfigError("inflation: window must be >= 1");
    const std::int64_t targets =
        options.window_counts_total ? options.window - 3 : options.window;
    if (targets < 1)
        throw ConfigError("inflation: window leaves no regression targets");

    InflationRun run;
    run.rates = yearly_inflation(series);
    const std::size_t first = static_cast<std::size_t>(targets) + 3;
    if (run.rates.values.size() <= first)
        throw DataError("inflation: series too short for the first fitting window");

    Estimator estimator(est_cfg);
    for (std::size_t t = first; t < run.rates.values.size(); ++t) {
        const std::vector<double> window_data(run.rates.values.begin() +
                                                  static_cast<std::ptrdiff_t>(t - first),
                                              run.rates.values.begin() +
                                                  static_cast<std::ptrdiff_t>(t));
        const ARModel model = fit_ar3(window_data);
        if (model.ridge_fallback)
            ++run.ridge_fallbacks;
        double yhat = one_step_forecast(model, run.rates.values[t - 1], run.rates.values[t - 2],
                                        run.rates.values[t - 3]);
        if (options.forecast_override)
            yhat = options.forecast_override(t, yhat);
        const double y = run.rates.values[t];

        run.months.push_back(run.rates.months[t]);
        run.actuals.push_back(y);
        run.forecasts.push_back(yhat);
        run.records.push_back(estimator.observe(std::abs(y - yhat)));
    }
    run.clamp_warnings = estimator.clamp_warnings();
    return run;
}

} // namespace ncp
