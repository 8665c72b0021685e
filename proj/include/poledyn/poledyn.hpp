#pragma once

// Umbrella header for the poledyn toolkit: dynamics of the rational map
// family f(x) = x - sum_i alpha_i / (x - beta_i).

#include "bigfloat.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "interval_set.hpp"
#include "map.hpp"
#include "map_io.hpp"
#include "orbit.hpp"
#include "precision.hpp"
#include "rational.hpp"
#include "report_io.hpp"
#include "rng.hpp"
