#pragma once

// Umbrella header.

#include "dmdsi/benchmark_system.hpp"
#include "dmdsi/csv.hpp"
#include "dmdsi/dmd.hpp"
#include "dmdsi/experiments.hpp"
#include "dmdsi/linalg.hpp"
#include "dmdsi/runge_kutta.hpp"
#include "dmdsi/sysident.hpp"
#include "dmdsi/trajectory.hpp"
#include "dmdsi/transformation.hpp"
