#pragma once

// Umbrella header.

#include "pvq/core.hpp"
#include "pvq/eval.hpp"
#include "pvq/ingest.hpp"
#include "pvq/io.hpp"
#include "pvq/metrics.hpp"
#include "pvq/parallel.hpp"
#include "pvq/random.hpp"
#include "pvq/sampler.hpp"
#include "pvq/som.hpp"
