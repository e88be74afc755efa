#pragma once

// Umbrella header for the layout-guided video toolkit.

#include "lvd/benchmark.hpp"
#include "lvd/dsl.hpp"
#include "lvd/energy.hpp"
#include "lvd/geometry.hpp"
#include "lvd/grid.hpp"
#include "lvd/guidance.hpp"
#include "lvd/llm_client.hpp"
#include "lvd/paths.hpp"
#include "lvd/physics.hpp"
#include "lvd/prompting.hpp"
#include "lvd/render.hpp"
#include "lvd/rng.hpp"
