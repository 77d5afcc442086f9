#pragma once

#include "spinboson/version.hpp"
#include "spinboson/errors.hpp"
#include "spinboson/model.hpp"
#include "spinboson/matsubara.hpp"
#include "spinboson/thermo.hpp"
#include "spinboson/spectrum.hpp"
#include "spinboson/exact_diag.hpp"
#include "spinboson/sweep.hpp"
