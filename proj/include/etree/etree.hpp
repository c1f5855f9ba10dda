#pragma once

// Energy trees: recursive partitioning with distance-covariance tests for
// mixed-type covariates (numeric, nominal, functional, graph-structured).

#include "etree/dataset.hpp"
#include "etree/dataset_io.hpp"
#include "etree/distances.hpp"
#include "etree/energy.hpp"
#include "etree/expansion.hpp"
#include "etree/matrix.hpp"
#include "etree/parallel.hpp"
#include "etree/rng.hpp"
#include "etree/serialize.hpp"
#include "etree/simulate.hpp"
#include "etree/split.hpp"
#include "etree/tree.hpp"
