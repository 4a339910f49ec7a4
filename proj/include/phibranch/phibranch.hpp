// Convenience umbrella for the whole library.
#pragma once

#include "phibranch/branch_io.hpp"
#include "phibranch/catalog.hpp"
#include "phibranch/config.hpp"
#include "phibranch/continuation.hpp"
#include "phibranch/degree.hpp"
#include "phibranch/errors.hpp"
#include "phibranch/grid.hpp"
#include "phibranch/phi.hpp"
#include "phibranch/problem.hpp"
#include "phibranch/rng.hpp"
#include "phibranch/solver.hpp"
#include "phibranch/svg.hpp"
