#pragma once

#include "exo/orf/discomfort.hpp"
#include "exo/orf/exp_fit.hpp"
#include "exo/orf/grid.hpp"
#include "exo/orf/optimum.hpp"
#include "exo/orf/samples.hpp"
#include "exo/orf/surface.hpp"
