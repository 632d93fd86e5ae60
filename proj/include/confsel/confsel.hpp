#pragma once

// Umbrella header for the selection engine (CLI layer excluded).

#include "confsel/asymptotics.hpp"
#include "confsel/bh.hpp"
#include "confsel/error.hpp"
#include "confsel/pipeline.hpp"
#include "confsel/pvalue.hpp"
#include "confsel/random.hpp"
#include "confsel/score.hpp"
#include "confsel/sim.hpp"
#include "confsel/version.hpp"
