#pragma once

#include "bhps/core.hpp"
#include "bhps/model.hpp"
#include "bhps/fock_basis.hpp"
#include "bhps/operators.hpp"
#include "bhps/phase_point.hpp"
#include "bhps/states.hpp"
#include "bhps/series.hpp"
#include "bhps/integrator.hpp"
#include "bhps/parallel.hpp"
#include "bhps/exact.hpp"
#include "bhps/rng.hpp"
#include "bhps/husimi.hpp"
#include "bhps/sampling.hpp"
#include "bhps/meanfield.hpp"
#include "bhps/ensemble.hpp"
#include "bhps/analysis.hpp"
#include "bhps/io.hpp"
#include "bhps/scenario.hpp"
