#pragma once

// Umbrella header for the whole library.

#include "refgame/agents.hpp"
#include "refgame/analysis.hpp"
#include "refgame/checkpoint.hpp"
#include "refgame/evaluation.hpp"
#include "refgame/experiments.hpp"
#include "refgame/graph.hpp"
#include "refgame/lstm.hpp"
#include "refgame/optim.hpp"
#include "refgame/params.hpp"
#include "refgame/rng.hpp"
#include "refgame/sampling.hpp"
#include "refgame/scripted.hpp"
#include "refgame/tensor.hpp"
#include "refgame/training.hpp"
#include "refgame/world.hpp"
