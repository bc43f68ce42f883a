#pragma once

#include "psiotrl/aggregator_env.hpp"
#include "psiotrl/errors.hpp"
#include "psiotrl/harness/config.hpp"
#include "psiotrl/harness/report.hpp"
#include "psiotrl/harness/suite.hpp"
#include "psiotrl/orchestrator.hpp"
#include "psiotrl/pubsub_msg.hpp"
#include "psiotrl/random.hpp"
#include "psiotrl/rl_core.hpp"
#include "psiotrl/stats.hpp"
