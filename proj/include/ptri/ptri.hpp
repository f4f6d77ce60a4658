#pragma once

// Planar-anchored multiview triangulation: umbrella header.

#include "ptri/analysis.hpp"
#include "ptri/bench.hpp"
#include "ptri/critical_system.hpp"
#include "ptri/errors.hpp"
#include "ptri/geometry.hpp"
#include "ptri/homotopy.hpp"
#include "ptri/objective.hpp"
#include "ptri/pipeline.hpp"
#include "ptri/polynomial.hpp"
#include "ptri/sampling.hpp"
#include "ptri/scene.hpp"
#include "ptri/triangulate.hpp"
#include "ptri/types.hpp"
