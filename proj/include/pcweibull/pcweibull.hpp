#pragma once

// Everything in one include.

#include "pcweibull/errors.hpp"
#include "pcweibull/numerics.hpp"
#include "pcweibull/weibull.hpp"
#include "pcweibull/divergence.hpp"
#include "pcweibull/pc_prior.hpp"
#include "pcweibull/reference_priors.hpp"
#include "pcweibull/inference.hpp"
#include "pcweibull/io.hpp"
