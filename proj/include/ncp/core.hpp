#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncp {

/// Absolute tolerance used by invariant checks on constructed values.
inline constexpr double kInvariantTol = 1e-9;

/// A grid of miscoverage levels alpha_1 < ... < alpha_K together with the
/// score bound B. Index 1 is the smallest alpha (widest prediction set),
/// index K the largest (narrowest set). Immutable after construction.
class CoverageGrid {
public:
    CoverageGrid(std::vector<double> alphas, double score_bound)
        : alphas_(std::move(alphas)), score_bound_(score_bound) {
        if (alphas_.empty())
            throw std::invalid_argument("CoverageGrid: needs at least one level");
        if (!(score_bound_ > 0) || !std::isfinite(score_bound_))
            throw std::invalid_argument("CoverageGrid: score bound must be positive and finite");
        double prev = 0.0;
        for (std::size_t i = 0; i < alphas_.size(); ++i) {
            const double a = alphas_[i];
            if (!std::isfinite(a) || a <= prev || a >= 1.0)
                throw std::invalid_argument(
                    "CoverageGrid: levels must be strictly increasing within (0,1); "
                    "offending index " + std::to_string(i + 1));
            prev = a;
        }
    }

    /// K levels evenly spaced as alpha_i = i / (K+1), i = 1..K.
    static CoverageGrid evenly_spaced(std::size_t k, double score_bound) {
        if (k == 0)
            throw std::invalid_argument("CoverageGrid: K must be >= 1");
        std::vector<double> a(k);
        for (std::size_t i = 0; i < k; ++i)
            a[i] = static_cast<double>(i + 1) / static_cast<double>(k + 1);
        return CoverageGrid(std::move(a), score_bound);
    }

    const std::vector<double> &alphas() const { return alphas_; }
    double alpha(std::size_t i) const { return alphas_[i]; } // 0-based
    double score_bound() const { return score_bound_; }
    std::size_t size() const { return alphas_.size(); }

private:
    std::vector<double> alphas_;
    double score_bound_;
};

/// The threshold vector deployed at step t. Ordering is a property of the
/// estimator that produced it: constrained methods keep q non-increasing
/// within [0, B], the independent tracker promises nothing.
struct QuantileState {
    std::vector<double> q;
    std::int64_t t = 0;
};

/// Normalized gaps between consecutive thresholds, a point on the simplex
/// in K+1 coordinates. Coordinate 0 is the slack above q_1, coordinate K
/// the mass below q_K. A positive floor mu makes the implied thresholds
/// strictly decreasing with gaps >= B*mu; mu = 0 marks an unconstrained
/// gap vector (used for comparator paths).
class GapWeights {
public:
    GapWeights(std::vector<double> w, double min_mass_mu)
        : w_(std::move(w)), mu_(min_mass_mu) {
        const std::size_t n = w_.size();
        if (n < 2)
            throw std::invalid_argument("GapWeights: needs K+1 >= 2 coordinates");
        if (!(mu_ >= 0.0) || mu_ >= 1.0 / static_cast<double>(n))
            throw std::invalid_argument("GapWeights: floor must satisfy 0 <= mu < 1/(K+1)");
        double sum = 0.0;
        for (double wi : w_) {
            if (!std::isfinite(wi) || wi < mu_ - kInvariantTol)
                throw std::invalid_argument("GapWeights: weights must be >= mu");
            sum += wi;
        }
        if (std::abs(sum - 1.0) > kInvariantTol)
            throw std::invalid_argument("GapWeights: weights must sum to 1");
    }

    const std::vector<double> &w() const { return w_; }
    double mu() const { return mu_; }
    std::size_t levels() const { return w_.size() - 1; } // K

private:
    std::vector<double> w_;
    double mu_;
};

/// One observed step: the score, the thresholds it was scored against,
/// the per-level miscoverage indicators, and (synthetic runs) the oracle
/// thresholds. err_i = 1 exactly when score > q_i; a score exactly at the
/// threshold counts as covered. The stored score is the one the update
/// consumed (clamped into [0, B] when the raw observation fell outside).
struct StepRecord {
    std::int64_t t = 0;
    double score = 0.0;
    std::vector<double> q;
    std::vector<std::uint8_t> err;
    std::vector<double> q_star; // empty when no oracle is available
};

/// Symmetric interval [center - radius, center + radius].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Miscoverage indicators 1{score > q_i} against a threshold vector.
inline std::vector<std::uint8_t> miscoverage_indicators(double score,
                                                        const std::vector<double> &q) {
    std::vector<std::uint8_t> err(q.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        err[i] = score > q[i] ? 1 : 0;
    return err;
}

inline bool is_nonincreasing(const std::vector<double> &q, double tol = 0.0) {
    for (std::size_t i = 0; i + 1 < q.size(); ++i)
        if (q[i] < q[i + 1] - tol) return false;
    return true;
}

/// Thresholds implied by gap weights: q_i = B * sum_{j=i..K} w_j, i = 1..K.
/// The suffix sum is accumulated right to left so replays are bit-identical.
inline QuantileState quantiles_from_gaps(const GapWeights &gw, const CoverageGrid &grid) {
    const std::size_t k = grid.size();
    if (gw.w().size() != k + 1)
        throw std::invalid_argument("quantiles_from_gaps: weight count must be K+1");
    std::vector<double> q(k);
    double acc = 0.0;
    for (std::size_t i = k; i >= 1; --i) {
        acc += gw.w()[i];
        q[i - 1] = grid.score_bound() * acc;
    }
    return QuantileState{std::move(q), 0};
}

/// Gap weights implied by strictly decreasing thresholds in (0, B), using
/// the boundary conventions q_0 = B and q_{K+1} = 0. Round-trips with
/// quantiles_from_gaps to within 1e-12. The result carries no floor.
inline GapWeights gaps_from_quantiles(const QuantileState &qs, const CoverageGrid &grid) {
    const std::size_t k = grid.size();
    const double b = grid.score_bound();
    if (qs.q.size() != k)
        throw std::invalid_argument("gaps_from_quantiles: threshold count must be K");
    for (std::size_t i = 0; i < k; ++i) {
        if (!(qs.q[i] > 0.0) || !(qs.q[i] < b))
            throw std::invalid_argument("gaps_from_quantiles: thresholds must lie in (0, B)");
        if (i + 1 < k && !(qs.q[i] > qs.q[i + 1]))
            throw std::invalid_argument("gaps_from_quantiles: thresholds must be strictly decreasing");
    }
    std::vector<double> w(k + 1);
    w[0] = (b - qs.q[0]) / b;
    for (std::size_t i = 1; i < k; ++i)
        w[i] = (qs.q[i - 1] - qs.q[i]) / b;
    w[k] = qs.q[k - 1] / b;
    return GapWeights(std::move(w), 0.0);
}

/// The prediction set for an absolute-error score: [center - q, center + q].
inline Interval prediction_interval(double center, double q_i) {
    if (!(q_i >= 0.0) || !std::isfinite(q_i))
        throw std::invalid_argument("prediction_interval: radius must be >= 0");
    return Interval{center - q_i, center + q_i};
}

} // namespace ncp
