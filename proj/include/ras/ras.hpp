#pragma once

#include "ras/blocks.hpp"
#include "ras/checks.hpp"
#include "ras/energy.hpp"
#include "ras/fit.hpp"
#include "ras/flocking.hpp"
#include "ras/graph.hpp"
#include "ras/lower_bound.hpp"
#include "ras/rng.hpp"
#include "ras/scenario.hpp"
#include "ras/state.hpp"
#include "ras/swarm.hpp"
#include "ras/system.hpp"
