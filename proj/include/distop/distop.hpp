#pragma once

#include "distop/common.hpp"
#include "distop/envs/grid_map.hpp"
#include "distop/envs/gridworld.hpp"
#include "distop/envs/point_maze.hpp"
#include "distop/envs/random_walk.hpp"
#include "distop/loop/system.hpp"
#include "distop/nn/adam.hpp"
#include "distop/nn/checkpoint.hpp"
#include "distop/nn/mlp.hpp"
#include "distop/policy/agent_common.hpp"
#include "distop/policy/sac_continuous.hpp"
#include "distop/policy/sac_discrete.hpp"
#include "distop/repr/contrastive.hpp"
#include "distop/repr/encoder.hpp"
#include "distop/selector/selector.hpp"
#include "distop/store/sampling.hpp"
#include "distop/store/transition.hpp"
#include "distop/topology/graph.hpp"
#include "distop/topology/oegn.hpp"
#include "distop/topology/text_format.hpp"
