#pragma once

#include "isingsel/analysis.hpp"
#include "isingsel/error.hpp"
#include "isingsel/harness.hpp"
#include "isingsel/model.hpp"
#include "isingsel/rng.hpp"
#include "isingsel/sampling.hpp"
#include "isingsel/selection.hpp"
#include "isingsel/solver.hpp"
