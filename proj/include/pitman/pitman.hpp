#pragma once

#include "pitman/errors.hpp"
#include "pitman/scalar.hpp"
#include "pitman/params.hpp"
#include "pitman/numerics.hpp"
#include "pitman/combinatorics.hpp"
#include "pitman/distribution.hpp"
#include "pitman/asymptotics.hpp"
#include "pitman/sampler.hpp"
#include "pitman/harness.hpp"
