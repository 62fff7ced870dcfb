#pragma once

#include "ratehalf/adversary.hpp"
#include "ratehalf/analysis.hpp"
#include "ratehalf/config.hpp"
#include "ratehalf/decoders.hpp"
#include "ratehalf/experiment.hpp"
#include "ratehalf/protocol.hpp"
#include "ratehalf/rng.hpp"
#include "ratehalf/signal.hpp"
