#pragma once

// Umbrella header for the whole library.

#include "flowinterp/consistency.hpp"
#include "flowinterp/core.hpp"
#include "flowinterp/flowio.hpp"
#include "flowinterp/interpolate.hpp"
#include "flowinterp/metrics.hpp"
#include "flowinterp/synth.hpp"
#include "flowinterp/warp.hpp"
