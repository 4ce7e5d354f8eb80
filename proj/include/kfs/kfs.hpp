#pragma once

#include "kfs/accum.hpp"
#include "kfs/bounds.hpp"
#include "kfs/csv.hpp"
#include "kfs/errors.hpp"
#include "kfs/experiments.hpp"
#include "kfs/fewshot.hpp"
#include "kfs/kernel.hpp"
#include "kfs/model_io.hpp"
#include "kfs/parallel.hpp"
#include "kfs/profile.hpp"
#include "kfs/rng.hpp"
#include "kfs/sampling.hpp"
#include "kfs/stats.hpp"
#include "kfs/support.hpp"
