#pragma once

#include "trustctl/controller.hpp"
#include "trustctl/csv.hpp"
#include "trustctl/estimator.hpp"
#include "trustctl/experiment.hpp"
#include "trustctl/linsys.hpp"
#include "trustctl/metrics.hpp"
#include "trustctl/sim.hpp"
#include "trustctl/threat.hpp"
#include "trustctl/trust.hpp"
#include "trustctl/types.hpp"
#include "trustctl/version.hpp"
