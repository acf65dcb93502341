#pragma once

// Umbrella header for the full controller stack.

#include "ddc/answer_extract.hpp"
#include "ddc/cli_app.hpp"
#include "ddc/confidence.hpp"
#include "ddc/config.hpp"
#include "ddc/engine.hpp"
#include "ddc/errors.hpp"
#include "ddc/evidence.hpp"
#include "ddc/gateway.hpp"
#include "ddc/incomplete_beta.hpp"
#include "ddc/path_source.hpp"
#include "ddc/phase_space.hpp"
#include "ddc/pruning.hpp"
#include "ddc/quantiles.hpp"
#include "ddc/rng.hpp"
#include "ddc/simulation.hpp"
#include "ddc/synthetic.hpp"
#include "ddc/token_event.hpp"
#include "ddc/trace.hpp"
