#pragma once

// Umbrella header for the library (the manifest header is separate: it needs OpenSSL).

#include "ldlab/anneal.hpp"
#include "ldlab/competitors.hpp"
#include "ldlab/config.hpp"
#include "ldlab/csv.hpp"
#include "ldlab/energy.hpp"
#include "ldlab/error.hpp"
#include "ldlab/experiments.hpp"
#include "ldlab/geometry.hpp"
#include "ldlab/grid.hpp"
#include "ldlab/riesz.hpp"
#include "ldlab/shapes.hpp"
#include "ldlab/star.hpp"
