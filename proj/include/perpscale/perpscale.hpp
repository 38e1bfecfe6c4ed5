#ifndef PERPSCALE_PERPSCALE_HPP
#define PERPSCALE_PERPSCALE_HPP

/// Umbrella header for the perpscale library: a t-SNE embedding engine plus
/// the perplexity-scaling toolkit built on the linear rule Per' = rho * Per.

#include "perpscale/affinity.hpp"
#include "perpscale/dataset.hpp"
#include "perpscale/distance.hpp"
#include "perpscale/embedding.hpp"
#include "perpscale/error.hpp"
#include "perpscale/export.hpp"
#include "perpscale/gradient.hpp"
#include "perpscale/io.hpp"
#include "perpscale/manifest.hpp"
#include "perpscale/metrics.hpp"
#include "perpscale/optimizer.hpp"
#include "perpscale/parallel.hpp"
#include "perpscale/pca.hpp"
#include "perpscale/pipeline.hpp"
#include "perpscale/quadtree.hpp"
#include "perpscale/random.hpp"
#include "perpscale/sampling.hpp"
#include "perpscale/scaling.hpp"
#include "perpscale/svg.hpp"
#include "perpscale/version.hpp"

#endif
