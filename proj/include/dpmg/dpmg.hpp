#pragma once

// Umbrella header for the DPM-G toolkit: location-scale Dirichlet process
// mixtures of Gaussians with affine-transformation support, density
// estimation and partition post-processing.

#include "dpmg/affine.hpp"
#include "dpmg/clustering.hpp"
#include "dpmg/common.hpp"
#include "dpmg/density.hpp"
#include "dpmg/distributions.hpp"
#include "dpmg/experiment.hpp"
#include "dpmg/grid.hpp"
#include "dpmg/io.hpp"
#include "dpmg/linalg.hpp"
#include "dpmg/model.hpp"
#include "dpmg/partition.hpp"
#include "dpmg/pipeline.hpp"
#include "dpmg/rng.hpp"
#include "dpmg/sampler.hpp"
#include "dpmg/scenario.hpp"
