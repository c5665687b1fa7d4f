#pragma once

// Umbrella header for the IGCL library: unsupervised multivariate time-series
// anomaly prediction with diffusion-generated precursor patterns, an
// overlapping-window dilated temporal-convolution encoder, a contrastive
// objective, and an importance-scored memory bank.

#include "igcl/checkpoint.hpp"
#include "igcl/config.hpp"
#include "igcl/contrastive.hpp"
#include "igcl/diffusion.hpp"
#include "igcl/encoder.hpp"
#include "igcl/errors.hpp"
#include "igcl/evaluation.hpp"
#include "igcl/mat.hpp"
#include "igcl/memory_bank.hpp"
#include "igcl/model.hpp"
#include "igcl/plot.hpp"
#include "igcl/rng.hpp"
#include "igcl/scoring.hpp"
#include "igcl/series.hpp"
#include "igcl/synth.hpp"
#include "igcl/training.hpp"
#include "igcl/zip.hpp"
