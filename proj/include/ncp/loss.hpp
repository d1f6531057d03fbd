#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ncp/core.hpp"

namespace ncp {

/// Per-level subgradients of the joint pinball loss, g_i = alpha_i - err_i.
/// Each entry is either alpha_i (covered) or alpha_i - 1 (miscovered).
struct LevelGradient {
    std::vector<double> g;
};

/// Pinball (quantile) loss (s - q) * (1{s > q} - alpha). Nonnegative, with
/// its population minimizer at the (1 - alpha)-quantile of s.
inline double pinball_loss(double q, double s, double alpha) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw std::invalid_argument("pinball_loss: alpha must lie in (0,1)");
    const double indicator = s > q ? 1.0 : 0.0;
    return (s - q) * (indicator - alpha);
}

/// Subgradient of the pinball loss in q: alpha - 1{s > q}. At the kink s = q
/// the covered branch is taken, returning alpha.
inline double pinball_subgradient(double q, double s, double alpha) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw std::invalid_argument("pinball_subgradient: alpha must lie in (0,1)");
    return alpha - (s > q ? 1.0 : 0.0);
}

/// Sum of per-level pinball losses over the grid.
inline double joint_loss(const QuantileState &qs, double s, const CoverageGrid &grid) {
    if (qs.q.size() != grid.size())
        throw std::invalid_argument("joint_loss: dimension mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        total += pinball_loss(qs.q[i], s, grid.alpha(i));
    return total;
}

/// Per-level subgradient vector g_i = alpha_i - 1{s > q_i}.
inline LevelGradient joint_gradient(const QuantileState &qs, double s,
                                    const CoverageGrid &grid) {
    if (qs.q.size() != grid.size())
        throw std::invalid_argument("joint_gradient: dimension mismatch");
    LevelGradient lg;
    lg.g.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        lg.g[i] = grid.alpha(i) - (s > qs.q[i] ? 1.0 : 0.0);
    return lg;
}

/// Gradient of the loss in gap coordinates. Gap i sits inside every
/// threshold q_j with j <= i, so the chain rule accumulates prefix sums:
///
///   entry_0 = 0,   entry_i = B * sum_{j=1..i} (alpha_j - err_j),  i = 1..K.
///
/// Coordinate 0 (the slack above q_1) enters no threshold and receives zero
/// gradient; it moves only through renormalization in the simplex
/// projection. Every entry is bounded by B*K in magnitude.
inline std::vector<double> gap_gradient(const LevelGradient &lg, const CoverageGrid &grid) {
    const std::size_t k = grid.size();
    if (lg.g.size() != k)
        throw std::invalid_argument("gap_gradient: gradient must have K entries");
    std::vector<double> out(k + 1);
    out[0] = 0.0;
    double acc = 0.0;
    for (std::size_t i = 1; i <= k; ++i) {
        acc += lg.g[i - 1];
        out[i] = grid.score_bound() * acc;
    }
    return out;
}

/// Joint loss evaluated through the gap parametrization.
inline double gap_loss(const GapWeights &gw, double s, const CoverageGrid &grid) {
    return joint_loss(quantiles_from_gaps(gw, grid), s, grid);
}

} // namespace ncp
