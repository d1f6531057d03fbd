#!/usr/bin/env python3
"""Regenerates cpiaucsl_sample.csv, a synthetic monthly price index in FRED
export layout. Deterministic: piecewise-linear yearly-inflation anchors that
follow the broad postwar US pattern, two incommensurate sinusoids so rolling
AR fits see a full-rank design, and seeded month-over-month noise so forecast
residuals land at realistic tens of basis points. Not real CPI data."""

import math
import random

ANCHORS = [
    (1950.0, 0.020), (1951.2, 0.079), (1952.5, 0.020), (1955.0, 0.008),
    (1960.0, 0.015), (1965.0, 0.016), (1970.0, 0.055), (1974.9, 0.110),
    (1976.5, 0.058), (1980.2, 0.135), (1983.0, 0.032), (1986.0, 0.019),
    (1990.5, 0.054), (1995.0, 0.028), (2000.0, 0.034), (2005.0, 0.030),
    (2008.6, 0.049), (2009.5, -0.014), (2011.0, 0.030), (2015.0, 0.001),
    (2019.0, 0.018), (2020.4, 0.006), (2021.5, 0.048), (2022.5, 0.085),
    (2023.5, 0.037), (2024.5, 0.031), (2025.5, 0.027),
]


def yearly_rate(t):
    if t <= ANCHORS[0][0]:
        return ANCHORS[0][1]
    for (t0, r0), (t1, r1) in zip(ANCHORS, ANCHORS[1:]):
        if t <= t1:
            return r0 + (r1 - r0) * (t - t0) / (t1 - t0)
    return ANCHORS[-1][1]


def main():
    rng = random.Random(20260819)
    rows = []
    cpi = 23.5
    m = 0
    for year in range(1950, 2026):
        for month in range(1, 13):
            if year == 2025 and month > 6:
                break
            t = year + (month - 0.5) / 12.0
            wiggle = 0.0006 * math.sin(2 * math.pi * m / 7.3) \
                + 0.0004 * math.sin(2 * math.pi * m / 23.7)
            noise = rng.gauss(0.0, 0.0012)
            growth = (1.0 + yearly_rate(t)) ** (1.0 / 12.0) - 1.0 + wiggle + noise
            if m > 0:
                cpi *= 1.0 + growth
            rows.append((year, month, cpi))
            m += 1

    with open("cpiaucsl_sample.csv", "w", newline="\n") as f:
        f.write("DATE,CPIAUCSL\n")
        for year, month, value in rows:
            f.write(f"{year:04d}-{month:02d}-01,{value:.3f}\n")
    print(f"wrote {len(rows)} rows, final level {rows[-1][2]:.3f}")


if __name__ == "__main__":
    main()
