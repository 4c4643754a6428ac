#pragma once
// Umbrella header: fairness post-processing for multi-task models.

#include "fairmtl/data.hpp"
#include "fairmtl/distrib.hpp"
#include "fairmtl/errors.hpp"
#include "fairmtl/fairtransform.hpp"
#include "fairmtl/metrics.hpp"
#include "fairmtl/mtl.hpp"
#include "fairmtl/rng.hpp"
#include "fairmtl/types.hpp"
