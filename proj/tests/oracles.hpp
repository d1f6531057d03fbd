#pragma once

// Independent reference implementations used only by the tests. Each one
// solves the same problem as the library by a structurally different
// method (bisection instead of active-set scan, grid dynamic programming
// instead of pooling, an explicit matrix instead of accumulated sums), so
// agreement is evidence rather than tautology.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "ncp/core.hpp"
#include "ncp/loss.hpp"
#include "ncp/rng.hpp"

namespace oracles {

/// KL projection onto {w : sum w = 1, w_i >= mu} by pure bisection on the
/// scaling constant c in w_i = max(mu, c w_tilde_i).
inline std::vector<double> kl_projection_bisection(const std::vector<double> &w_tilde,
                                                   double mu) {
    auto mass = [&](double c) {
        double s = 0.0;
        for (double v : w_tilde)
            s += std::max(mu, c * v);
        return s;
    };
    double lo = 0.0, hi = 1.0;
    while (mass(hi) < 1.0)
        hi *= 2.0;
    for (int it = 0; it < 500; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mass(mid) < 1.0 ? lo : hi) = mid;
    }
    const double c = 0.5 * (lo + hi);
    std::vector<double> w(w_tilde.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = std::max(mu, c * w_tilde[i]);
    return w;
}

inline double kl_divergence(const std::vector<double> &w, const std::vector<double> &w_tilde) {
    double d = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        d += w[i] * std::log(w[i] / w_tilde[i]);
    return d;
}

/// Euclidean projection onto {B >= q_1, q_i - q_{i+1} >= min_gap, q_K >= 0}
/// restricted to a uniform grid of the given pitch, by dynamic programming
/// over levels (suffix minima make each level linear in the grid size).
/// Returns the grid-optimal vector.
inline std::vector<double> pava_grid_dp(const std::vector<double> &v, double bound,
                                        double pitch, double min_gap = 0.0) {
    const std::size_t k = v.size();
    const std::size_t g_count = static_cast<std::size_t>(std::llround(bound / pitch)) + 1;
    const std::size_t gap_steps = static_cast<std::size_t>(std::llround(min_gap / pitch));
    const double inf = std::numeric_limits<double>::infinity();

    // D_l(g): best cost of levels l..K-1 given q_l sits at grid point g.
    // Work bottom-up keeping prefix minima of D_{l+1}; store each level's
    // running argmin so the optimal vector can be reconstructed.
    std::vector<double> prefix(g_count, 0.0);
    std::vector<std::vector<std::size_t>> argmin_tbl(k, std::vector<std::size_t>(g_count, 0));

    for (std::size_t level = k; level-- > 0;) {
        std::vector<double> d(g_count);
        for (std::size_t g = 0; g < g_count; ++g) {
            const double diff = static_cast<double>(g) * pitch - v[level];
            if (level + 1 == k)
                d[g] = diff * diff;
            else if (g < gap_steps)
                d[g] = inf;
            else
                d[g] = diff * diff + prefix[g - gap_steps];
        }
        double run = inf;
        std::size_t run_arg = 0;
        for (std::size_t g = 0; g < g_count; ++g) {
            if (d[g] < run) {
                run = d[g];
                run_arg = g;
            }
            prefix[g] = run;
            argmin_tbl[level][g] = run_arg;
        }
    }

    std::vector<double> out(k);
    std::size_t g = argmin_tbl[0][g_count - 1];
    out[0] = static_cast<double>(g) * pitch;
    for (std::size_t level = 1; level < k; ++level) {
        g = argmin_tbl[level][g - gap_steps];
        out[level] = static_cast<double>(g) * pitch;
    }
    return out;
}

/// Reflection into [a, b] by literally bouncing off whichever boundary was
/// crossed until the point lands inside.
inline double reflect_iterative(double z, double a, double b) {
    while (z < a || z > b) {
        if (z < a)
            z = 2.0 * a - z;
        else
            z = 2.0 * b - z;
    }
    return z;
}

/// Central difference of the pinball loss in q.
inline double pinball_fd(double q, double s, double alpha, double h = 1e-6) {
    return (ncp::pinball_loss(q + h, s, alpha) - ncp::pinball_loss(q - h, s, alpha)) /
           (2.0 * h);
}

/// Gap gradient through the explicit Jacobian: J is K x (K+1) with
/// J[i][j] = B when j >= max(i, 1) (rows are q_i = B sum_{j>=i} w_j), and
/// the result is J^T g.
inline std::vector<double> gap_gradient_matrix(const std::vector<double> &g,
                                               const ncp::CoverageGrid &grid) {
    const std::size_t k = grid.size();
    std::vector<std::vector<double>> jac(k, std::vector<double>(k + 1, 0.0));
    for (std::size_t i = 1; i <= k; ++i)
        for (std::size_t j = 0; j <= k; ++j)
            if (j >= i)
                jac[i - 1][j] = grid.score_bound();
    std::vector<double> out(k + 1, 0.0);
    for (std::size_t j = 0; j <= k; ++j)
        for (std::size_t i = 0; i < k; ++i)
            out[j] += jac[i][j] * g[i];
    return out;
}

/// Deterministic uniform helper for test instances.
inline double uniform_in(std::mt19937_64 &eng, double lo, double hi) {
    return lo + (hi - lo) * ncp::uniform_open(eng);
}

} // namespace oracles
