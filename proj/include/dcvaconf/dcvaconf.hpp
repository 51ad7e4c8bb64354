#ifndef DCVACONF_DCVACONF_HPP
#define DCVACONF_DCVACONF_HPP

#include "dcvaconf/baselines.hpp"
#include "dcvaconf/dcva.hpp"
#include "dcvaconf/error.hpp"
#include "dcvaconf/eval.hpp"
#include "dcvaconf/features.hpp"
#include "dcvaconf/parallel.hpp"
#include "dcvaconf/random.hpp"
#include "dcvaconf/raster.hpp"
#include "dcvaconf/smoothing.hpp"
#include "dcvaconf/synth.hpp"

#endif
