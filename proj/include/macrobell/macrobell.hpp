#pragma once

#include "macrobell/bell.hpp"
#include "macrobell/dicke.hpp"
#include "macrobell/errors.hpp"
#include "macrobell/finite.hpp"
#include "macrobell/hermite.hpp"
#include "macrobell/limit.hpp"
#include "macrobell/noise.hpp"
#include "macrobell/numeric.hpp"
#include "macrobell/oracle.hpp"
#include "macrobell/povm.hpp"
#include "macrobell/rng.hpp"
#include "macrobell/sampler.hpp"
