#pragma once

#include "wiplab/chains.hpp"
#include "wiplab/config.hpp"
#include "wiplab/coupling.hpp"
#include "wiplab/error.hpp"
#include "wiplab/mixing.hpp"
#include "wiplab/model_io.hpp"
#include "wiplab/moments.hpp"
#include "wiplab/parallel.hpp"
#include "wiplab/partition.hpp"
#include "wiplab/prokhorov.hpp"
#include "wiplab/rates.hpp"
#include "wiplab/rng.hpp"
#include "wiplab/smoothing.hpp"
#include "wiplab/spectral.hpp"
#include "wiplab/stats.hpp"
