#pragma once

// Umbrella header. config.hpp is left out because it needs nlohmann/json.

#include "cvrr/cvdist.hpp"
#include "cvrr/design.hpp"
#include "cvrr/error.hpp"
#include "cvrr/mcsim.hpp"
#include "cvrr/merror.hpp"
#include "cvrr/monitor.hpp"
#include "cvrr/quadrature.hpp"
#include "cvrr/roots.hpp"
#include "cvrr/runrules.hpp"
#include "cvrr/specfun.hpp"
