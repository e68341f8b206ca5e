#pragma once

#include "avl/errors.hpp"
#include "avl/grid.hpp"
#include "avl/kernels.hpp"
#include "avl/mittag_leffler.hpp"
#include "avl/sampled.hpp"
#include "avl/resolvents.hpp"
#include "avl/model.hpp"
#include "avl/riccati.hpp"
#include "avl/transform.hpp"
#include "avl/rng.hpp"
#include "avl/simulate.hpp"
#include "avl/classical.hpp"
#include "avl/pricing.hpp"
#include "avl/config.hpp"
#include "avl/csv.hpp"
#include "avl/validation.hpp"
