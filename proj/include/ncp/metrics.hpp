#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ncp/core.hpp"
#include "ncp/estimators.hpp"
#include "ncp/loss.hpp"

namespace ncp {

/// Gaps more negative than this count as nestedness violations; anything
/// within it is rounding noise.
inline constexpr double kGapViolationTol = 1e-12;

/// Post-run evaluation bundle. Time series are indexed by step (0-based
/// over the record sequence); set_size_rolling is stored per level.
struct RunMetrics {
    std::vector<double> ce;                             // per level
    std::vector<double> ce_sum_cumulative;              // per step
    std::vector<double> l1_rolling;                     // per step, empty without oracle
    std::vector<std::vector<double>> set_size_rolling;  // [level][step]
    std::vector<double> min_gap;                        // per step, empty for K=1
    std::int64_t violations = 0;
};

/// CE_i = | empirical miscoverage at level i - alpha_i | over the run.
inline std::vector<double> calibration_error(const std::vector<StepRecord> &records,
                                             const CoverageGrid &grid) {
    if (records.empty())
        throw std::invalid_argument("calibration_error: need at least one record");
    const std::size_t k = grid.size();
    std::vector<double> miss(k, 0.0);
    for (const StepRecord &r : records) {
        if (r.err.size() != k)
            throw std::invalid_argument("calibration_error: record dimension mismatch");
        for (std::size_t i = 0; i < k; ++i)
            miss[i] += static_cast<double>(r.err[i]);
    }
    std::vector<double> ce(k);
    for (std::size_t i = 0; i < k; ++i)
        ce[i] = std::abs(miss[i] / static_cast<double>(records.size()) - grid.alpha(i));
    return ce;
}

/// Sum over levels of the prefix calibration error, one value per step.
/// The downward trend of this series is the aggregate-calibration shape
/// check used on real data, where no oracle exists.
inline std::vector<double> cumulative_ce_sum(const std::vector<StepRecord> &records,
                                             const CoverageGrid &grid) {
    const std::size_t k = grid.size();
    std::vector<double> counts(k, 0.0);
    std::vector<double> out;
    out.reserve(records.size());
    for (std::size_t t = 0; t < records.size(); ++t) {
        if (records[t].err.size() != k)
            throw std::invalid_argument("cumulative_ce_sum: record dimension mismatch");
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            counts[i] += static_cast<double>(records[t].err[i]);
            total += std::abs(counts[i] / static_cast<double>(t + 1) - grid.alpha(i));
        }
        out.push_back(total);
    }
    return out;
}

/// Rolling mean (trailing window dt) of the per-step L1 distance to the
/// oracle thresholds. Windows longer than the available history average
/// over the prefix.
inline std::vector<double> l1_tracking_error(const std::vector<StepRecord> &records,
                                             std::int64_t dt) {
    if (dt < 1)
        throw std::invalid_argument("l1_tracking_error: window must be >= 1");
    std::vector<double> dist;
    dist.reserve(records.size());
    for (const StepRecord &r : records) {
        if (r.q_star.empty() || r.q_star.size() != r.q.size())
            throw std::invalid_argument("l1_tracking_error: records carry no oracle thresholds");
        double d = 0.0;
        for (std::size_t i = 0; i < r.q.size(); ++i)
            d += std::abs(r.q[i] - r.q_star[i]);
        dist.push_back(d);
    }
    std::vector<double> out(dist.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < dist.size(); ++t) {
        acc += dist[t];
        if (t >= static_cast<std::size_t>(dt))
            acc -= dist[t - static_cast<std::size_t>(dt)];
        const double n = static_cast<double>(std::min<std::size_t>(t + 1, static_cast<std::size_t>(dt)));
        out[t] = acc / n;
    }
    return out;
}

/// Rolling mean of the interval widths 2 q_{t,i}, one series per level.
inline std::vector<std::vector<double>> set_size(const std::vector<StepRecord> &records,
                                                 std::int64_t window) {
    if (window < 1)
        throw std::invalid_argument("set_size: window must be >= 1");
    if (records.empty())
        return {};
    const std::size_t k = records.front().q.size();
    std::vector<std::vector<double>> out(k, std::vector<double>(records.size()));
    for (std::size_t i = 0; i < k; ++i) {
        double acc = 0.0;
        for (std::size_t t = 0; t < records.size(); ++t) {
            if (records[t].q.size() != k)
                throw std::invalid_argument("set_size: record dimension mismatch");
            acc += 2.0 * records[t].q[i];
            if (t >= static_cast<std::size_t>(window))
                acc -= 2.0 * records[t - static_cast<std::size_t>(window)].q[i];
            const double n =
                static_cast<double>(std::min<std::size_t>(t + 1, static_cast<std::size_t>(window)));
            out[i][t] = acc / n;
        }
    }
    return out;
}

/// Per-step minimum consecutive gap and the count of (t, i) pairs whose
/// gap dips below -1e-12.
struct GapSummary {
    std::vector<double> min_gap;
    std::int64_t violations = 0;
};

inline GapSummary nestedness_gaps(const std::vector<StepRecord> &records) {
    GapSummary out;
    out.min_gap.reserve(records.size());
    for (const StepRecord &r : records) {
        if (r.q.size() < 2)
            throw std::invalid_argument("nestedness_gaps: need K >= 2");
        double mn = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < r.q.size(); ++i) {
            const double gap = r.q[i] - r.q[i + 1];
            mn = std::min(mn, gap);
            if (gap < -kGapViolationTol)
                ++out.violations;
        }
        out.min_gap.push_back(mn);
    }
    return out;
}

inline RunMetrics compute_run_metrics(const std::vector<StepRecord> &records,
                                      const CoverageGrid &grid, std::int64_t dt) {
    RunMetrics m;
    m.ce = calibration_error(records, grid);
    m.ce_sum_cumulative = cumulative_ce_sum(records, grid);
    if (!records.empty() && !records.front().q_star.empty())
        m.l1_rolling = l1_tracking_error(records, dt);
    m.set_size_rolling = set_size(records, dt);
    if (grid.size() >= 2) {
        GapSummary gaps = nestedness_gaps(records);
        m.min_gap = std::move(gaps.min_gap);
        m.violations = gaps.violations;
    }
    return m;
}

/// Empirical dynamic-regret check against the oracle path. The loss-regret
/// inequality is a deterministic theorem for EG and PG, so lemma_holds is
/// asserted hard by the tests; the averaged quantile-error form assumes a
/// density floor and is reported informationally.
struct RegretReport {
    double loss_regret = 0.0;        // sum_t f_t(q_t) - f_t(q*_t)
    double lemma_rhs = 0.0;          // mirror-descent bound (eg) or projected-gradient bound (pg)
    bool lemma_holds = false;
    double path_w = 0.0;             // sum_t ||w*_{t+1} - w*_t||_1
    double path_q = 0.0;             // sum_t ||q*_{t+1} - q*_t||_1
    double quantile_error_sum = 0.0; // sum_t (p/2) ||q_t - q*_t||_2^2
    double theorem_rhs = 0.0;        // averaged bound on quantile_error_sum / T
    bool theorem_holds = false;
    std::int64_t support_exits = 0;  // steps with some |q_i - q*_i| > support halfwidth
};

namespace detail {

/// Gap weights of an oracle threshold vector with the boundary
/// conventions q_0 = B, q_{K+1} = 0. No feasibility is assumed here.
inline std::vector<double> raw_gaps(const std::vector<double> &q, double b) {
    std::vector<double> w(q.size() + 1);
    w[0] = (b - q.front()) / b;
    for (std::size_t i = 1; i < q.size(); ++i)
        w[i] = (q[i - 1] - q[i]) / b;
    w[q.size()] = q.back() / b;
    return w;
}

} // namespace detail

inline RegretReport regret_and_bounds(const std::vector<StepRecord> &records,
                                      const EstimatorConfig &cfg, double density_floor_p,
                                      double support_halfwidth) {
    if (cfg.method != Method::eg && cfg.method != Method::pg)
        throw std::invalid_argument("regret_and_bounds: bounds are stated for eg and pg only");
    if (records.empty())
        throw std::invalid_argument("regret_and_bounds: need at least one record");
    const std::size_t k = cfg.grid.size();
    const double b = cfg.grid.score_bound();
    const double t_total = static_cast<double>(records.size());

    RegretReport rep;
    std::vector<double> prev_gaps;
    std::vector<double> prev_qstar;
    for (const StepRecord &r : records) {
        if (r.q_star.empty() || r.q_star.size() != k || r.q.size() != k)
            throw std::invalid_argument("regret_and_bounds: records carry no oracle thresholds");

        const QuantileState deployed{r.q, r.t};
        const QuantileState oracle{r.q_star, r.t};
        rep.loss_regret += joint_loss(deployed, r.score, cfg.grid) -
                           joint_loss(oracle, r.score, cfg.grid);

        double sq = 0.0;
        bool exited = false;
        for (std::size_t i = 0; i < k; ++i) {
            const double d = r.q[i] - r.q_star[i];
            sq += d * d;
            if (support_halfwidth > 0.0 && std::abs(d) > support_halfwidth)
                exited = true;
        }
        rep.quantile_error_sum += 0.5 * density_floor_p * sq;
        if (exited)
            ++rep.support_exits;

        std::vector<double> gaps = detail::raw_gaps(r.q_star, b);
        if (!prev_qstar.empty()) {
            for (std::size_t i = 0; i < k; ++i)
                rep.path_q += std::abs(r.q_star[i] - prev_qstar[i]);
            for (std::size_t i = 0; i <= k; ++i)
                rep.path_w += std::abs(gaps[i] - prev_gaps[i]);
        }
        prev_qstar = r.q_star;
        prev_gaps = std::move(gaps);
    }

    const double kk = static_cast<double>(k);
    if (cfg.method == Method::eg) {
        const double g_inf = b * kk;
        rep.lemma_rhs = (1.0 + std::log(1.0 / cfg.mu)) / cfg.eta * (1.0 + rep.path_w) +
                        cfg.eta * g_inf * g_inf * t_total;
        rep.theorem_rhs = (1.0 + std::log(1.0 / cfg.mu)) * (1.0 + rep.path_w) /
                              (cfg.eta * t_total) +
                          g_inf * g_inf * cfg.eta / 2.0;
    } else {
        rep.lemma_rhs = 3.0 * b * b * kk / cfg.eta * (1.0 + rep.path_q) +
                        cfg.eta * kk * t_total;
        rep.theorem_rhs =
            3.0 * b * b * kk * (1.0 + rep.path_q) / (cfg.eta * t_total) + cfg.eta * kk;
    }
    rep.lemma_holds = rep.loss_regret <= rep.lemma_rhs;
    rep.theorem_holds = rep.quantile_error_sum / t_total <= rep.theorem_rhs;
    return rep;
}

} // namespace ncp
