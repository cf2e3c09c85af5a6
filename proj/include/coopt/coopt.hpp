#pragma once

#include "coopt/continuous_problem.hpp"
#include "coopt/continuous_solver.hpp"
#include "coopt/delta_trap.hpp"
#include "coopt/discrete_solver.hpp"
#include "coopt/energy_model.hpp"
#include "coopt/errors.hpp"
#include "coopt/oracle.hpp"
#include "coopt/soft_solver.hpp"
