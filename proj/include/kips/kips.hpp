#pragma once

// Umbrella header.

#include "kips/action_space.hpp"
#include "kips/basis.hpp"
#include "kips/covariance.hpp"
#include "kips/design.hpp"
#include "kips/estimators.hpp"
#include "kips/harness/artifacts.hpp"
#include "kips/harness/config.hpp"
#include "kips/harness/csv.hpp"
#include "kips/harness/dataset.hpp"
#include "kips/harness/experiments.hpp"
#include "kips/harness/manifest.hpp"
#include "kips/harness/outputs.hpp"
#include "kips/harness/svg.hpp"
#include "kips/kernel.hpp"
#include "kips/math.hpp"
#include "kips/moments.hpp"
#include "kips/optimize/dsl.hpp"
#include "kips/optimize/mlp.hpp"
#include "kips/optimize/oracle.hpp"
#include "kips/optimize/pto.hpp"
#include "kips/parallel.hpp"
#include "kips/policy.hpp"
#include "kips/rng.hpp"
#include "kips/sample.hpp"
#include "kips/simenv/covariates.hpp"
#include "kips/simenv/market.hpp"
#include "kips/simenv/params.hpp"
#include "kips/simenv/simulate.hpp"
#include "kips/value.hpp"
#include "kips/version.hpp"
