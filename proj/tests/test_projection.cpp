#include <catch2/catch_amalgamated.hpp>

#include "ncp/projection.hpp"
#include "ncp/rng.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

using namespace ncp;

namespace {

double sum(const std::vector<double> &v) { return std::accumulate(v.begin(), v.end(), 0.0); }

double linf(const std::vector<double> &a, const std::vector<double> &b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double l2(const std::vector<double> &a, const std::vector<double> &b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

} // namespace

TEST_CASE("simplex projection handles the closed-form cases") {
    {
        const auto res = kl_project_truncated_simplex({1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.1);
        for (double w : res.w)
            REQUIRE(w == Catch::Approx(1.0 / 3).margin(1e-14));
        REQUIRE(res.c == Catch::Approx(1.0).margin(1e-12));
        REQUIRE(res.active_floor == 0);
    }
    {
        const auto res = kl_project_truncated_simplex({2.0, 2.0}, 0.1);
        REQUIRE(res.w[0] == Catch::Approx(0.5).margin(1e-14));
        REQUIRE(res.w[1] == Catch::Approx(0.5).margin(1e-14));
        REQUIRE(res.c == Catch::Approx(0.25).margin(1e-12));
    }
    {
        // one coordinate pinned at the floor, the rest rescaled
        const auto res = kl_project_truncated_simplex({0.9, 0.1}, 0.2);
        REQUIRE(res.w[0] == Catch::Approx(0.8).margin(1e-12));
        REQUIRE(res.w[1] == Catch::Approx(0.2).margin(1e-12));
        REQUIRE(res.c == Catch::Approx(8.0 / 9.0).margin(1e-12));
        REQUIRE(res.active_floor == 1);
    }
}

TEST_CASE("simplex projection rejects bad inputs") {
    REQUIRE_THROWS_AS(kl_project_truncated_simplex({1.0}, 0.1), std::invalid_argument);
    REQUIRE_THROWS_AS(kl_project_truncated_simplex({0.5, -0.1}, 0.1), std::invalid_argument);
    REQUIRE_THROWS_AS(kl_project_truncated_simplex({0.5, 0.5}, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(kl_project_truncated_simplex({0.5, 0.5}, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(kl_project_truncated_simplex({0.5, 0.5}, -0.1), std::invalid_argument);
}

TEST_CASE("simplex projection is scale invariant and survives underflow") {
    const std::vector<double> base{0.7, 0.2, 0.05, 0.05};
    const auto a = kl_project_truncated_simplex(base, 0.08);
    std::vector<double> scaled = base;
    for (double &v : scaled)
        v *= 7.3;
    const auto b = kl_project_truncated_simplex(scaled, 0.08);
    REQUIRE(linf(a.w, b.w) <= 1e-13);
    REQUIRE(b.c == Catch::Approx(a.c / 7.3).margin(1e-12));

    // exponentiation underflow: tiny and zero entries are floored, not fatal
    const auto c = kl_project_truncated_simplex({1e-320, 0.5, 0.0}, 0.05);
    REQUIRE(sum(c.w) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(c.w[0] == Catch::Approx(0.05).margin(1e-12));
    REQUIRE(c.w[2] == Catch::Approx(0.05).margin(1e-12));
    REQUIRE(c.w[1] == Catch::Approx(0.9).margin(1e-12));
}

TEST_CASE("simplex projection is idempotent on feasible points") {
    std::mt19937_64 eng = make_stream(21, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(uniform_open(eng) * 7);
        const double mu = oracles::uniform_in(eng, 1e-4, 0.9 / static_cast<double>(n));
        std::vector<double> w(n);
        double total = 0.0;
        for (double &x : w)
            total += (x = oracles::uniform_in(eng, 0.05, 1.0));
        // map onto the truncated simplex: floor plus scaled remainder
        for (double &x : w)
            x = mu + (x / total) * (1.0 - mu * static_cast<double>(n));
        const auto res = kl_project_truncated_simplex(w, mu);
        REQUIRE(linf(res.w, w) <= 1e-12);
    }
}

TEST_CASE("simplex projection agrees with a bisection oracle on random instances") {
    std::mt19937_64 eng = make_stream(22, 0);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(uniform_open(eng) * 7);
        const double mu = oracles::uniform_in(eng, 1e-4, 0.99 / static_cast<double>(n));
        std::vector<double> w_tilde(n);
        for (double &x : w_tilde)
            x = std::exp(oracles::uniform_in(eng, -12.0, 4.0));

        const auto res = kl_project_truncated_simplex(w_tilde, mu);
        const auto want = oracles::kl_projection_bisection(w_tilde, mu);

        REQUIRE(linf(res.w, want) <= 1e-8);
        REQUIRE(std::abs(sum(res.w) - 1.0) <= 1e-12);
        std::size_t floored = 0;
        for (std::size_t i = 0; i < n; ++i) {
            REQUIRE(res.w[i] >= mu - 1e-12);
            if (res.w[i] <= mu + 1e-12)
                ++floored;
            else
                // fixed point: unfloored coordinates are pure rescalings
                REQUIRE(res.w[i] == Catch::Approx(res.c * w_tilde[i]).epsilon(1e-9));
        }
        REQUIRE(floored == res.active_floor);

        // projection objective: never worse than the oracle's point
        REQUIRE(oracles::kl_divergence(res.w, w_tilde) <=
                oracles::kl_divergence(want, w_tilde) + 1e-8);
    }
}

TEST_CASE("pava projection handles the basic shapes") {
    {
        const auto r = pava_project_decreasing({0.5, 0.3}, 1.0);
        REQUIRE(r[0] == Catch::Approx(0.5).margin(1e-15));
        REQUIRE(r[1] == Catch::Approx(0.3).margin(1e-15));
    }
    {
        const auto r = pava_project_decreasing({0.3, 0.5}, 1.0);
        REQUIRE(r[0] == Catch::Approx(0.4).margin(1e-15));
        REQUIRE(r[1] == Catch::Approx(0.4).margin(1e-15));
    }
    {
        const auto r = pava_project_decreasing({1.2, -0.1}, 1.0);
        REQUIRE(r[0] == Catch::Approx(1.0).margin(1e-15));
        REQUIRE(r[1] == Catch::Approx(0.0).margin(1e-15));
    }
    REQUIRE_THROWS_AS(pava_project_decreasing({}, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(pava_project_decreasing({0.5}, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(pava_project_decreasing({0.5, 0.4}, 1.0, -0.1), std::invalid_argument);
    REQUIRE_THROWS_AS(pava_project_decreasing({0.5, 0.4, 0.3}, 1.0, 0.6), std::invalid_argument);
}

TEST_CASE("pava projection matches a grid dynamic program on random instances") {
    std::mt19937_64 eng = make_stream(23, 0);
    const double bound = 1.0;
    const double pitch = 1e-3;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = 1 + static_cast<std::size_t>(uniform_open(eng) * 8);
        std::vector<double> v(k);
        for (double &x : v)
            x = oracles::uniform_in(eng, -0.5, bound + 0.5);

        const auto got = pava_project_decreasing(v, bound);
        const auto dp = oracles::pava_grid_dp(v, bound, pitch);
        REQUIRE(linf(got, dp) <= 2e-3);

        // optimality against the grid witness
        REQUIRE(l2(got, v) <= l2(dp, v) + 1e-6);

        // feasibility
        for (std::size_t i = 0; i < k; ++i) {
            REQUIRE(got[i] >= -1e-15);
            REQUIRE(got[i] <= bound + 1e-15);
            if (i + 1 < k)
                REQUIRE(got[i] >= got[i + 1] - 1e-15);
        }
    }
}

TEST_CASE("pava projection satisfies the pooled-block optimality conditions") {
    std::mt19937_64 eng = make_stream(24, 0);
    const double bound = 1.0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t k = 2 + static_cast<std::size_t>(uniform_open(eng) * 7);
        std::vector<double> v(k);
        for (double &x : v)
            x = oracles::uniform_in(eng, -0.5, bound + 0.5);
        const auto r = pava_project_decreasing(v, bound);

        // split into constant blocks
        std::size_t start = 0;
        while (start < k) {
            std::size_t stop = start + 1;
            while (stop < k && r[stop] == r[start])
                ++stop;
            double mean = 0.0;
            for (std::size_t i = start; i < stop; ++i)
                mean += v[i];
            mean /= static_cast<double>(stop - start);
            if (r[start] > 0.0 && r[start] < bound) {
                // interior block value is exactly its input mean
                REQUIRE(r[start] == Catch::Approx(mean).margin(1e-12));
            } else if (r[start] == bound) {
                REQUIRE(mean >= bound - 1e-12);
            } else {
                REQUIRE(mean <= 1e-12);
            }
            // adjacent interior blocks must be strictly separated
            if (stop < k)
                REQUIRE(r[start] > r[stop]);
            start = stop;
        }
    }
}

TEST_CASE("pava projection contracts distances to feasible points") {
    std::mt19937_64 eng = make_stream(25, 0);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t k = 1 + static_cast<std::size_t>(uniform_open(eng) * 6);
        std::vector<double> v(k), q(k);
        for (double &x : v)
            x = oracles::uniform_in(eng, -0.5, 1.5);
        for (double &x : q)
            x = oracles::uniform_in(eng, 0.0, 1.0);
        std::sort(q.rbegin(), q.rend());
        const auto r = pava_project_decreasing(v, 1.0);
        REQUIRE(l2(r, q) <= l2(v, q) + 1e-12);
    }
}

TEST_CASE("pava projection honors a minimum gap") {
    {
        // feasible spacing is preserved
        const std::vector<double> v{0.8, 0.55, 0.3};
        const auto r = pava_project_decreasing(v, 1.0, 0.2);
        REQUIRE(linf(r, v) <= 1e-15);
    }
    {
        // collapsing inputs are spread exactly min_gap apart
        const auto r = pava_project_decreasing({0.5, 0.5}, 1.0, 0.1);
        REQUIRE(r[0] - r[1] == Catch::Approx(0.1).margin(1e-12));
        REQUIRE(r[0] == Catch::Approx(0.55).margin(1e-12));
    }
    std::mt19937_64 eng = make_stream(26, 0);
    const double pitch = 1e-3;
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t k = 2 + static_cast<std::size_t>(uniform_open(eng) * 4);
        const double gap = 0.05;
        std::vector<double> v(k);
        for (double &x : v)
            x = oracles::uniform_in(eng, -0.5, 1.5);
        const auto got = pava_project_decreasing(v, 1.0, gap);
        const auto dp = oracles::pava_grid_dp(v, 1.0, pitch, gap);
        REQUIRE(linf(got, dp) <= 2e-3);
        for (std::size_t i = 0; i + 1 < k; ++i)
            REQUIRE(got[i] - got[i + 1] >= gap - 1e-12);
        REQUIRE(got.front() <= 1.0 + 1e-15);
        REQUIRE(got.back() >= -1e-15);
    }
}
