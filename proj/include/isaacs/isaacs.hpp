#pragma once

#include "isaacs/types.hpp"
#include "isaacs/errors.hpp"
#include "isaacs/coef_fn.hpp"
#include "isaacs/model.hpp"
#include "isaacs/barrier.hpp"
#include "isaacs/validation.hpp"
#include "isaacs/extended.hpp"
#include "isaacs/problem_io.hpp"
#include "isaacs/grid.hpp"
#include "isaacs/operators.hpp"
#include "isaacs/solver.hpp"
#include "isaacs/rng.hpp"
#include "isaacs/policy.hpp"
#include "isaacs/simulator.hpp"
#include "isaacs/surface.hpp"
