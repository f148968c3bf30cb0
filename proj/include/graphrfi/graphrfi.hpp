#pragma once

// Umbrella header.

#include "graphrfi/attacks.hpp"
#include "graphrfi/autodiff.hpp"
#include "graphrfi/checkpoint.hpp"
#include "graphrfi/dataset.hpp"
#include "graphrfi/errors.hpp"
#include "graphrfi/evaluate.hpp"
#include "graphrfi/features.hpp"
#include "graphrfi/forward.hpp"
#include "graphrfi/gcn.hpp"
#include "graphrfi/gradcheck.hpp"
#include "graphrfi/graph.hpp"
#include "graphrfi/json_io.hpp"
#include "graphrfi/metrics.hpp"
#include "graphrfi/model.hpp"
#include "graphrfi/nrf.hpp"
#include "graphrfi/rng.hpp"
#include "graphrfi/sweep.hpp"
#include "graphrfi/synth.hpp"
#include "graphrfi/tensor.hpp"
#include "graphrfi/train.hpp"
