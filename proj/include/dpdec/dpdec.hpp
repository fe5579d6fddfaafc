#pragma once

#include "dpdec/accountant.hpp"
#include "dpdec/attack.hpp"
#include "dpdec/dataset.hpp"
#include "dpdec/dp.hpp"
#include "dpdec/engines.hpp"
#include "dpdec/error.hpp"
#include "dpdec/experiment.hpp"
#include "dpdec/graph.hpp"
#include "dpdec/linalg.hpp"
#include "dpdec/objective.hpp"
#include "dpdec/partition.hpp"
#include "dpdec/rng.hpp"
#include "dpdec/stats.hpp"
