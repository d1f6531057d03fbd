#pragma once

// Umbrella header: online conformal prediction with jointly tracked,
// nested quantile thresholds.

#include "ncp/config.hpp"
#include "ncp/core.hpp"
#include "ncp/csv.hpp"
#include "ncp/errors.hpp"
#include "ncp/estimators.hpp"
#include "ncp/experiment.hpp"
#include "ncp/forecast.hpp"
#include "ncp/loss.hpp"
#include "ncp/metrics.hpp"
#include "ncp/projection.hpp"
#include "ncp/rng.hpp"
#include "ncp/synthetic.hpp"
