#pragma once

// Hand-force leakage calibration: regressors from wrist-sensor deltas to the
// wrench that leaks onto the drill sensor.

#include "drillforce/handforce/common.hpp"
#include "drillforce/handforce/forest.hpp"
#include "drillforce/handforce/grid_search.hpp"
#include "drillforce/handforce/linear.hpp"
#include "drillforce/handforce/mlp.hpp"
#include "drillforce/handforce/model.hpp"
