#pragma once

// Umbrella header for the numerical library (the CLI lives in gpmle/cli.hpp).

#include "gpmle/config.hpp"
#include "gpmle/covariance.hpp"
#include "gpmle/design.hpp"
#include "gpmle/error.hpp"
#include "gpmle/gausslin.hpp"
#include "gpmle/harness.hpp"
#include "gpmle/io.hpp"
#include "gpmle/mle.hpp"
#include "gpmle/report.hpp"
#include "gpmle/selftest.hpp"
#include "gpmle/simulate.hpp"
#include "gpmle/specfun.hpp"
#include "gpmle/stats.hpp"
