#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ncp {

/// Outcome of the KL projection onto the truncated simplex.
/// c is the scaling constant relative to the input vector, so
/// w_i = max(mu, c * w_tilde_i). active_floor counts floored coordinates.
struct SimplexProjectionResult {
    std::vector<double> w;
    double c = 0.0;
    std::size_t active_floor = 0;
};

namespace detail {

/// Residual at which a candidate solution is accepted as exact.
inline constexpr double kSimplexResidualTol = 1e-12;

/// Underflow guard: multiplicative weights shrunk to zero by exp() are
/// floored here so the projection stays defined. Negative input is still
/// rejected; only underflow is forgiven.
inline constexpr double kWeightFloor = 1e-300;

inline double floored_sum(const std::vector<double> &w_hat, double mu, double c) {
    double s = 0.0;
    for (double v : w_hat)
        s += std::max(mu, c * v);
    return s;
}

} // namespace detail

/// KL projection of w_tilde onto {w : sum w = 1, w_i >= mu}. The minimizer
/// has the form w_i = max(mu, c * w_tilde_i) for a unique c > 0; the scan
/// below tests each candidate active set in ascending w_tilde order and
/// certifies the winner by its simplex residual. A monotone bisection on c
/// backs the scan up so the routine cannot return an uncertified result.
inline SimplexProjectionResult kl_project_truncated_simplex(const std::vector<double> &w_tilde,
                                                            double mu) {
    const std::size_t n = w_tilde.size();
    if (n < 2)
        throw std::invalid_argument("kl_project_truncated_simplex: need at least 2 coordinates");
    if (!(mu > 0.0) || !(mu * static_cast<double>(n) < 1.0))
        throw std::invalid_argument("kl_project_truncated_simplex: need 0 < mu < 1/n");
    std::vector<double> w_hat(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = w_tilde[i];
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument("kl_project_truncated_simplex: entries must be finite and positive");
        w_hat[i] = std::max(v, detail::kWeightFloor);
        total += w_hat[i];
    }

    // The solution is invariant to rescaling w_tilde, so normalize for
    // conditioning and translate c back to the caller's scale at the end.
    for (std::size_t i = 0; i < n; ++i)
        w_hat[i] /= total;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return w_hat[a] < w_hat[b]; });

    // suffix[m] = mass of the n-m largest entries (those scaled, not floored).
    std::vector<double> suffix(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;)
        suffix[i] = suffix[i + 1] + w_hat[order[i]];

    const double slack = 16.0 * detail::kSimplexResidualTol;
    for (std::size_t m = 0; m < n; ++m) {
        if (!(suffix[m] > 0.0))
            break;
        const double c = (1.0 - mu * static_cast<double>(m)) / suffix[m];
        if (!(c > 0.0) || !std::isfinite(c))
            continue;
        if (m > 0 && c * w_hat[order[m - 1]] > mu + slack)
            continue;
        if (c * w_hat[order[m]] < mu - slack)
            continue;

        SimplexProjectionResult res;
        res.w.resize(n);
        double scaled_mass = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            res.w[order[i]] = mu;
        for (std::size_t i = m; i < n; ++i) {
            res.w[order[i]] = c * w_hat[order[i]];
            scaled_mass += res.w[order[i]];
        }
        // Renormalize the scaled block so the simplex residual is pure
        // rounding noise rather than accumulated division error.
        if (scaled_mass > 0.0) {
            const double fix = (1.0 - mu * static_cast<double>(m)) / scaled_mass;
            for (std::size_t i = m; i < n; ++i)
                res.w[order[i]] *= fix;
        }
        const double residual =
            std::abs(std::accumulate(res.w.begin(), res.w.end(), 0.0) - 1.0);
        bool floors_ok = true;
        for (double v : res.w)
            if (v < mu - detail::kSimplexResidualTol) {
                floors_ok = false;
                break;
            }
        if (residual <= detail::kSimplexResidualTol && floors_ok) {
            res.c = c / total;
            res.active_floor = m;
            return res;
        }
    }

    // Fallback: S(c) = sum max(mu, c w_hat_i) is continuous and
    // nondecreasing with S(0) = n mu < 1, so bisection brackets the root.
    double lo = 0.0;
    double hi = 1.0;
    int guard = 0;
    while (detail::floored_sum(w_hat, mu, hi) < 1.0) {
        hi *= 2.0;
        if (++guard > 1100)
            throw std::runtime_error("kl_project_truncated_simplex: failed to bracket c");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (detail::floored_sum(w_hat, mu, mid) < 1.0)
            lo = mid;
        else
            hi = mid;
    }
    const double c = 0.5 * (lo + hi);
    SimplexProjectionResult res;
    res.w.resize(n);
    res.c = c / total;
    for (std::size_t i = 0; i < n; ++i) {
        res.w[i] = std::max(mu, c * w_hat[i]);
        if (res.w[i] <= mu)
            ++res.active_floor;
    }
    const double residual = std::accumulate(res.w.begin(), res.w.end(), 0.0) - 1.0;
    // Spread the leftover over the scaled coordinates; floored ones stay put.
    const std::size_t free_count = n - res.active_floor;
    if (free_count > 0) {
        const double shift = residual / static_cast<double>(free_count);
        for (std::size_t i = 0; i < n; ++i)
            if (res.w[i] > mu)
                res.w[i] -= shift;
    }
    return res;
}

/// Euclidean projection onto nonincreasing sequences in [0, B] whose
/// consecutive gaps are at least min_gap. The affine change of variables
/// u_i = v_i + (i-1) min_gap turns the gap constraint into plain
/// monotonicity with a constant box [(K-1) min_gap, B], where pool adjacent
/// violators followed by clipping is the exact projection.
inline std::vector<double> pava_project_decreasing(const std::vector<double> &v, double score_bound,
                                                   double min_gap = 0.0) {
    const std::size_t k = v.size();
    if (k == 0)
        throw std::invalid_argument("pava_project_decreasing: empty input");
    if (!(score_bound > 0.0) || !std::isfinite(score_bound))
        throw std::invalid_argument("pava_project_decreasing: score bound must be positive and finite");
    if (!(min_gap >= 0.0))
        throw std::invalid_argument("pava_project_decreasing: min_gap must be nonnegative");
    const double span = static_cast<double>(k - 1) * min_gap;
    if (span > score_bound)
        throw std::invalid_argument("pava_project_decreasing: min_gap infeasible for this bound");
    for (double x : v)
        if (!std::isfinite(x))
            throw std::invalid_argument("pava_project_decreasing: entries must be finite");

    // Blocks carry (mean, count); merging keeps means nonincreasing.
    std::vector<double> mean(k);
    std::vector<std::size_t> count(k);
    std::size_t top = 0;
    for (std::size_t i = 0; i < k; ++i) {
        mean[top] = v[i] + static_cast<double>(i) * min_gap;
        count[top] = 1;
        while (top > 0 && mean[top] > mean[top - 1]) {
            const double total_count = static_cast<double>(count[top - 1] + count[top]);
            mean[top - 1] = (mean[top - 1] * static_cast<double>(count[top - 1]) +
                             mean[top] * static_cast<double>(count[top])) /
                            total_count;
            count[top - 1] += count[top];
            --top;
        }
        ++top;
    }

    std::vector<double> out(k);
    std::size_t pos = 0;
    for (std::size_t b = 0; b < top; ++b) {
        const double clipped = std::clamp(mean[b], span, score_bound);
        for (std::size_t r = 0; r < count[b]; ++r, ++pos)
            out[pos] = clipped - static_cast<double>(pos) * min_gap;
    }
    return out;
}

} // namespace ncp
