#pragma once

#include "anomaly.hpp"
#include "errors.hpp"
#include "expansion.hpp"
#include "lattice.hpp"
#include "mode_finder.hpp"
#include "numerics.hpp"
#include "scattering.hpp"
