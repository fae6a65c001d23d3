#pragma once

// Group re-identification matching engine: depth-ordered context graphs,
// random-walk subgroup selection, cross-graph attention matching, circle-loss
// training, and a synthetic CMC evaluation harness.

#include "greid/affinity.hpp"
#include "greid/autodiff.hpp"
#include "greid/checkpoint.hpp"
#include "greid/common.hpp"
#include "greid/eval.hpp"
#include "greid/feature_store.hpp"
#include "greid/graph.hpp"
#include "greid/matching.hpp"
#include "greid/random_walk.hpp"
#include "greid/synth.hpp"
#include "greid/training.hpp"
