#pragma once
// Umbrella header for the semi-sparsity decomposition library.
#include "benchmark.hpp"
#include "decompose.hpp"
#include "diff_ops.hpp"
#include "errors.hpp"
#include "fft.hpp"
#include "image.hpp"
#include "imageio.hpp"
#include "metrics.hpp"
#include "prox.hpp"
#include "spectral.hpp"
