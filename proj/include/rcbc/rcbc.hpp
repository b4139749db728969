#pragma once

#include "rcbc/error.hpp"
#include "rcbc/matrix.hpp"
#include "rcbc/solver_config.hpp"
#include "rcbc/huber.hpp"
#include "rcbc/weights.hpp"
#include "rcbc/oneway.hpp"
#include "rcbc/biclustering.hpp"
#include "rcbc/metrics.hpp"
#include "rcbc/simulate.hpp"
#include "rcbc/model_selection.hpp"
