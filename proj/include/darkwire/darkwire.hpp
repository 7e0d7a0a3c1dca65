#pragma once

#include "darkwire/model.hpp"
#include "darkwire/hamiltonian.hpp"
#include "darkwire/environment.hpp"
#include "darkwire/steadystate.hpp"
#include "darkwire/observables.hpp"
#include "darkwire/minimize.hpp"
#include "darkwire/optimize.hpp"
#include "darkwire/analysis.hpp"
#include "darkwire/config.hpp"
#include "darkwire/csv.hpp"
