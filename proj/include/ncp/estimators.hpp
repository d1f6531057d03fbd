#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ncp/core.hpp"
#include "ncp/errors.hpp"
#include "ncp/loss.hpp"
#include "ncp/projection.hpp"

namespace ncp {

enum class Method { independent, projected_tracker, eg, pg };

inline const char *method_name(Method m) {
    switch (m) {
    case Method::independent: return "tracker";
    case Method::projected_tracker: return "tracker-proj";
    case Method::eg: return "eg";
    case Method::pg: return "pg";
    }
    return "?";
}

/// Accepts the CLI spellings plus a few obvious aliases.
inline Method method_from_name(const std::string &name) {
    if (name == "tracker" || name == "independent") return Method::independent;
    if (name == "tracker-proj" || name == "projected_tracker" || name == "projected-tracker")
        return Method::projected_tracker;
    if (name == "eg") return Method::eg;
    if (name == "pg") return Method::pg;
    throw ConfigError("unknown method '" + name + "' (expected eg, pg, tracker, tracker-proj)");
}

/// Everything a step function needs besides the state: the grid, the step
/// size (score units for q-space methods, dimensionless for EG), the
/// simplex floor, and the initialization.
struct EstimatorConfig {
    Method method;
    CoverageGrid grid;
    double eta;
    double mu;                  // EG only
    double min_gap = 0.0;       // optional PAVA gap for pg / projected_tracker
    bool tracker_err_from_shadow = false;
    std::vector<double> init_q; // empty selects uniform gaps

    /// q-space methods step in score units, EG in mirror space where the
    /// gradient is up to B*K per coordinate; the defaults keep the
    /// eta*gradient products comparable across methods and sit where all
    /// methods both calibrate and track on the reference walk.
    static double default_eta(Method m, const CoverageGrid &grid) {
        return m == Method::eg ? 0.002 : 0.03 * grid.score_bound();
    }

    /// Well below the typical gap weight: a floor at the stationary gap
    /// pins EG against it and the one-sided noise biases every band
    /// outward, and the cumulative floor under level i forces a minimum
    /// band width of B*(K+1-i)*mu, which must stay under the data scale.
    static double default_mu(const CoverageGrid &grid) {
        return 1.0 / (100.0 * static_cast<double>(grid.size() + 1));
    }

    static EstimatorConfig with_defaults(Method m, CoverageGrid grid) {
        const double eta = default_eta(m, grid);
        const double mu = default_mu(grid);
        return EstimatorConfig{m, std::move(grid), eta, mu, 0.0, false, {}};
    }
};

/// Deployed thresholds plus method-specific internals: EG carries its gap
/// weights, the projected tracker its un-projected shadow iterate.
struct EstimatorSnapshot {
    QuantileState q_deployed;
    std::optional<GapWeights> weights;
    std::vector<double> shadow;
};

/// The next state together with the miscoverage indicators the step
/// consumed (always scored against the pre-update deployed thresholds,
/// except for the opt-in shadow-err tracker variant).
struct StepOutcome {
    EstimatorSnapshot next;
    std::vector<std::uint8_t> err;
};

namespace detail {

inline void check_config(const EstimatorConfig &cfg) {
    const std::size_t k = cfg.grid.size();
    if (!(cfg.eta > 0.0) || !std::isfinite(cfg.eta))
        throw ConfigError("estimator eta must be positive and finite");
    if (cfg.method == Method::eg &&
        (!(cfg.mu > 0.0) || !(cfg.mu < 1.0 / static_cast<double>(k + 1))))
        throw ConfigError("estimator mu must satisfy 0 < mu < 1/(K+1)");
    if (!(cfg.min_gap >= 0.0) ||
        static_cast<double>(k > 0 ? k - 1 : 0) * cfg.min_gap > cfg.grid.score_bound())
        throw ConfigError("estimator min_gap must be >= 0 and feasible within [0, B]");
    if (!cfg.init_q.empty()) {
        if (cfg.init_q.size() != k)
            throw ConfigError("explicit init must have exactly K thresholds");
        for (double q : cfg.init_q)
            if (!std::isfinite(q) || q < 0.0 || q > cfg.grid.score_bound())
                throw ConfigError("explicit init thresholds must lie in [0, B]");
        if (cfg.method != Method::independent && !is_nonincreasing(cfg.init_q))
            throw ConfigError("explicit init thresholds must be non-increasing");
    }
}

inline void require_finite_score(double s, const char *who) {
    if (!std::isfinite(s))
        throw std::invalid_argument(std::string(who) + ": score must be finite");
}

} // namespace detail

/// Initial state: uniform gap weights w_i = 1/(K+1), equivalently equally
/// spaced thresholds, unless the config carries explicit thresholds.
inline EstimatorSnapshot init(const EstimatorConfig &cfg) {
    detail::check_config(cfg);
    const std::size_t k = cfg.grid.size();
    EstimatorSnapshot st;

    if (cfg.method == Method::eg) {
        GapWeights w = [&] {
            if (cfg.init_q.empty())
                return GapWeights(std::vector<double>(k + 1, 1.0 / static_cast<double>(k + 1)),
                                  cfg.mu);
            QuantileState qs{cfg.init_q, 0};
            GapWeights raw = [&]() -> GapWeights {
                try {
                    return gaps_from_quantiles(qs, cfg.grid);
                } catch (const std::invalid_argument &e) {
                    throw ConfigError(std::string("EG init rejected: ") + e.what());
                }
            }();
            for (double wi : raw.w())
                if (wi < cfg.mu - kInvariantTol)
                    throw ConfigError("EG init gaps fall below the simplex floor");
            return GapWeights(raw.w(), cfg.mu);
        }();
        st.q_deployed = quantiles_from_gaps(w, cfg.grid);
        st.q_deployed.t = 1;
        st.weights = std::move(w);
        return st;
    }

    std::vector<double> q;
    if (!cfg.init_q.empty()) {
        q = cfg.init_q;
    } else {
        q.resize(k);
        for (std::size_t i = 0; i < k; ++i)
            q[i] = cfg.grid.score_bound() * static_cast<double>(k - i) /
                   static_cast<double>(k + 1);
    }
    if (cfg.method == Method::projected_tracker) {
        st.shadow = q;
        q = pava_project_decreasing(q, cfg.grid.score_bound(), cfg.min_gap);
    }
    st.q_deployed = QuantileState{std::move(q), 1};
    return st;
}

/// Per-level tracker update q' = q - eta (alpha - err), no coupling, no
/// projection, no clipping. Thresholds may cross or leave [0, B].
inline StepOutcome step_independent(const EstimatorConfig &cfg, const EstimatorSnapshot &state,
                                    double s) {
    detail::require_finite_score(s, "step_independent");
    StepOutcome out;
    out.err = miscoverage_indicators(s, state.q_deployed.q);
    out.next.q_deployed.q.resize(state.q_deployed.q.size());
    for (std::size_t i = 0; i < state.q_deployed.q.size(); ++i)
        out.next.q_deployed.q[i] =
            state.q_deployed.q[i] -
            cfg.eta * (cfg.grid.alpha(i) - static_cast<double>(out.err[i]));
    out.next.q_deployed.t = state.q_deployed.t + 1;
    return out;
}

/// Lazy projection: the un-projected shadow keeps accumulating tracker
/// steps; only the deployed copy is projected. err is scored against the
/// deployed thresholds unless the config opts into the shadow variant.
inline StepOutcome step_projected_tracker(const EstimatorConfig &cfg,
                                          const EstimatorSnapshot &state, double s) {
    detail::require_finite_score(s, "step_projected_tracker");
    StepOutcome out;
    out.err = miscoverage_indicators(
        s, cfg.tracker_err_from_shadow ? state.shadow : state.q_deployed.q);
    out.next.shadow.resize(state.shadow.size());
    for (std::size_t i = 0; i < state.shadow.size(); ++i)
        out.next.shadow[i] =
            state.shadow[i] - cfg.eta * (cfg.grid.alpha(i) - static_cast<double>(out.err[i]));
    out.next.q_deployed.q =
        pava_project_decreasing(out.next.shadow, cfg.grid.score_bound(), cfg.min_gap);
    out.next.q_deployed.t = state.q_deployed.t + 1;
    return out;
}

/// Greedy projection: gradient step from the deployed (already projected)
/// iterate, then projection; the projected point is the next step's base.
inline StepOutcome step_pg(const EstimatorConfig &cfg, const EstimatorSnapshot &state, double s) {
    detail::require_finite_score(s, "step_pg");
    StepOutcome out;
    out.err = miscoverage_indicators(s, state.q_deployed.q);
    std::vector<double> trial(state.q_deployed.q.size());
    for (std::size_t i = 0; i < trial.size(); ++i)
        trial[i] = state.q_deployed.q[i] -
                   cfg.eta * (cfg.grid.alpha(i) - static_cast<double>(out.err[i]));
    out.next.q_deployed.q = pava_project_decreasing(trial, cfg.grid.score_bound(), cfg.min_gap);
    out.next.q_deployed.t = state.q_deployed.t + 1;
    return out;
}

/// Multiplicative update on the gap weights followed by the KL projection.
/// The shared max exponent is subtracted before exponentiation; the
/// projection is invariant to that rescaling, so overflow is impossible
/// without changing the result.
inline StepOutcome step_eg(const EstimatorConfig &cfg, const EstimatorSnapshot &state, double s) {
    detail::require_finite_score(s, "step_eg");
    if (!state.weights)
        throw std::invalid_argument("step_eg: state carries no gap weights");
    StepOutcome out;
    out.err = miscoverage_indicators(s, state.q_deployed.q);

    const LevelGradient lg = joint_gradient(state.q_deployed, s, cfg.grid);
    const std::vector<double> grad = gap_gradient(lg, cfg.grid);
    const std::vector<double> &w = state.weights->w();

    std::vector<double> exponent(w.size());
    double max_exp = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < w.size(); ++i) {
        exponent[i] = -cfg.eta * grad[i];
        max_exp = std::max(max_exp, exponent[i]);
    }
    std::vector<double> w_tilde(w.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        w_tilde[i] = w[i] * std::exp(exponent[i] - max_exp);

    SimplexProjectionResult proj = kl_project_truncated_simplex(w_tilde, cfg.mu);
    GapWeights next_w(std::move(proj.w), cfg.mu);
    out.next.q_deployed = quantiles_from_gaps(next_w, cfg.grid);
    out.next.q_deployed.t = state.q_deployed.t + 1;
    out.next.weights = std::move(next_w);
    return out;
}

inline StepOutcome step(const EstimatorConfig &cfg, const EstimatorSnapshot &state, double s) {
    switch (cfg.method) {
    case Method::independent: return step_independent(cfg, state, s);
    case Method::projected_tracker: return step_projected_tracker(cfg, state, s);
    case Method::eg: return step_eg(cfg, state, s);
    case Method::pg: return step_pg(cfg, state, s);
    }
    throw ConfigError("unknown estimator method");
}

/// Sequential driver around the step functions. observe() clamps the raw
/// score into [0, B] (counting how often that fired), records the
/// pre-update deployment, and advances the state.
class Estimator {
public:
    explicit Estimator(EstimatorConfig cfg) : cfg_(std::move(cfg)), state_(init(cfg_)) {}

    StepRecord observe(double raw_score) {
        if (!std::isfinite(raw_score))
            throw std::invalid_argument("Estimator::observe: score must be finite");
        double s = raw_score;
        if (s < 0.0 || s > cfg_.grid.score_bound()) {
            s = std::clamp(s, 0.0, cfg_.grid.score_bound());
            ++clamp_warnings_;
        }
        StepRecord rec;
        rec.t = state_.q_deployed.t;
        rec.score = s;
        rec.q = state_.q_deployed.q;
        StepOutcome outcome = step(cfg_, state_, s);
        rec.err = std::move(outcome.err);
        state_ = std::move(outcome.next);
        return rec;
    }

    const EstimatorConfig &config() const { return cfg_; }
    const EstimatorSnapshot &state() const { return state_; }
    std::int64_t clamp_warnings() const { return clamp_warnings_; }

private:
    EstimatorConfig cfg_;
    EstimatorSnapshot state_;
    std::int64_t clamp_warnings_ = 0;
};

} // namespace ncp
