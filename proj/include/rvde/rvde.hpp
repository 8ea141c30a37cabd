#pragma once

#include "rvde/error.hpp"
#include "rvde/parallel.hpp"
#include "rvde/quadrature.hpp"
#include "rvde/geometry.hpp"
#include "rvde/kernels.hpp"
#include "rvde/beta_solver.hpp"
#include "rvde/estimator.hpp"
#include "rvde/baselines.hpp"
#include "rvde/data.hpp"
#include "rvde/config.hpp"
#include "rvde/harness.hpp"
