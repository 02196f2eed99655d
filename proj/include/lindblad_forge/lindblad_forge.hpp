#pragma once

#include "lindblad_forge/error.hpp"
#include "lindblad_forge/linalg.hpp"
#include "lindblad_forge/superoperator.hpp"
#include "lindblad_forge/system.hpp"
#include "lindblad_forge/bath.hpp"
#include "lindblad_forge/master_equation.hpp"
#include "lindblad_forge/propagator.hpp"
#include "lindblad_forge/exact.hpp"
#include "lindblad_forge/rng.hpp"
#include "lindblad_forge/instance.hpp"
#include "lindblad_forge/metrics.hpp"
#include "lindblad_forge/methods.hpp"
#include "lindblad_forge/ensemble.hpp"
#include "lindblad_forge/csv.hpp"
#include "lindblad_forge/config.hpp"
#include "lindblad_forge/commands.hpp"
