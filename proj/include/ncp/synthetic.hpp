#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ncp/core.hpp"
#include "ncp/errors.hpp"
#include "ncp/rng.hpp"

namespace ncp {

/// Reflected-random-walk stream: latent z_t bounces inside [a, b], the
/// observed score is uniform of width width_u around z_t.
struct WalkConfig {
    double a = 0.5;
    double b = 9.5;
    double z1 = 5.0;
    double sigma = 0.025;
    double width_u = 1.0;
    std::int64_t horizon = 50000;
    std::uint64_t seed = 1;
};

inline void validate_walk(const WalkConfig &cfg) {
    if (!(cfg.a < cfg.b) || !std::isfinite(cfg.a) || !std::isfinite(cfg.b))
        throw ConfigError("walk: need finite boundaries a < b");
    if (!(cfg.z1 >= cfg.a) || !(cfg.z1 <= cfg.b))
        throw ConfigError("walk: z1 must start inside [a, b]");
    if (!(cfg.sigma >= 0.0) || !std::isfinite(cfg.sigma))
        throw ConfigError("walk: sigma must be >= 0");
    if (!(cfg.width_u > 0.0) || !std::isfinite(cfg.width_u))
        throw ConfigError("walk: width must be positive");
    if (cfg.horizon < 1)
        throw ConfigError("walk: horizon must be >= 1");
}

/// Scores land in [a - w/2, b + w/2]; that support must sit inside [0, B]
/// or the estimators would clamp systematically.
inline void validate_walk_support(const WalkConfig &cfg, double score_bound) {
    validate_walk(cfg);
    if (cfg.a - cfg.width_u / 2.0 < 0.0 || cfg.b + cfg.width_u / 2.0 > score_bound)
        throw ConfigError("walk: score support [a - w/2, b + w/2] must lie inside [0, B]");
}

/// Iterated reflection into [a, b], computed in closed form by folding
/// through the triangular wave of period 2(b-a). Matches the loop
/// "reflect at whichever boundary was crossed, repeat" for any excursion
/// size, and is exact for excursions the loop would take many passes on.
inline double reflect(double z_tilde, double a, double b) {
    if (!std::isfinite(z_tilde))
        throw std::invalid_argument("reflect: input must be finite");
    if (!(a < b))
        throw std::invalid_argument("reflect: need a < b");
    const double period = 2.0 * (b - a);
    double y = std::fmod(z_tilde - a, period);
    if (y < 0.0)
        y += period;
    if (y > b - a)
        y = period - y;
    return a + y;
}

struct WalkPath {
    std::vector<double> z;
    std::vector<double> s;
};

/// Deterministic given the seed. Gaussian increments and the uniform score
/// offsets come from two split sub-streams so neither draw order nor count
/// couples them.
inline WalkPath generate_walk(const WalkConfig &cfg) {
    validate_walk(cfg);
    std::mt19937_64 eps_stream = make_stream(cfg.seed, 0);
    std::mt19937_64 unif_stream = make_stream(cfg.seed, 1);

    WalkPath path;
    const std::size_t n = static_cast<std::size_t>(cfg.horizon);
    path.z.resize(n);
    path.s.resize(n);

    double z = cfg.z1;
    for (std::size_t t = 0; t < n; ++t) {
        if (t > 0) {
            const double step = cfg.sigma * normal_draw(eps_stream);
            z = reflect(z + step, cfg.a, cfg.b);
        }
        path.z[t] = z;
        path.s[t] = z + cfg.width_u * (uniform_open(unif_stream) - 0.5);
    }
    return path;
}

/// Oracle thresholds for the uniform score: the (1-alpha)-quantile of
/// Unif[z - w/2, z + w/2] is z + w/2 - alpha w. Strictly decreasing in i.
inline std::vector<double> true_quantiles(double z, const WalkConfig &cfg,
                                          const CoverageGrid &grid) {
    std::vector<double> q(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        q[i] = z + cfg.width_u / 2.0 - grid.alpha(i) * cfg.width_u;
    return q;
}

} // namespace ncp
