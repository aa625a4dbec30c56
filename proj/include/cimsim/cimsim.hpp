#pragma once

#include "cimsim/analysis.hpp"
#include "cimsim/couplings.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/gmps.hpp"
#include "cimsim/quad_state.hpp"
#include "cimsim/rng.hpp"
#include "cimsim/scheme_delay.hpp"
#include "cimsim/scheme_feedback.hpp"
#include "cimsim/sweep.hpp"
#include "cimsim/trajectory.hpp"
