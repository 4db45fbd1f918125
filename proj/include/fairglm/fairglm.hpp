#pragma once

// Group-fair generalized linear models: a convex penalty on cross-group
// linear-component differences, grouped disparity metrics, and the sweep
// protocol that traces accuracy-disparity trade-offs over the penalty weight.

#include "fairglm/csv.hpp"
#include "fairglm/dataset.hpp"
#include "fairglm/errors.hpp"
#include "fairglm/experiment.hpp"
#include "fairglm/family.hpp"
#include "fairglm/metrics.hpp"
#include "fairglm/penalty.hpp"
#include "fairglm/rng.hpp"
#include "fairglm/segmentation.hpp"
#include "fairglm/solver.hpp"
#include "fairglm/version.hpp"
