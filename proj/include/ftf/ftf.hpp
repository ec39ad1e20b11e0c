#pragma once

#include "ftf/admm.hpp"
#include "ftf/dual.hpp"
#include "ftf/errors.hpp"
#include "ftf/estimators.hpp"
#include "ftf/experiments.hpp"
#include "ftf/graph.hpp"
#include "ftf/io.hpp"
#include "ftf/linear_solvers.hpp"
#include "ftf/operators.hpp"
#include "ftf/prox.hpp"
#include "ftf/solve_result.hpp"
#include "ftf/sparse.hpp"
