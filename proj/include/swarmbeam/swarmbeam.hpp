#pragma once

// Umbrella header for the swarmbeam library.

#include "swarmbeam/beampattern.hpp"
#include "swarmbeam/common.hpp"
#include "swarmbeam/config.hpp"
#include "swarmbeam/experiments.hpp"
#include "swarmbeam/geometry.hpp"
#include "swarmbeam/gratinglobe.hpp"
#include "swarmbeam/io.hpp"
#include "swarmbeam/perturbation.hpp"
#include "swarmbeam/randmatrix.hpp"
#include "swarmbeam/version.hpp"
