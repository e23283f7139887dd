#pragma once

// Umbrella header: low-rank recovery by strongly convex programming.

#include "screc/dense_matrix.hpp"
#include "screc/errors.hpp"
#include "screc/io.hpp"
#include "screc/linear_map.hpp"
#include "screc/mc.hpp"
#include "screc/norms.hpp"
#include "screc/parallel.hpp"
#include "screc/problem_gen.hpp"
#include "screc/prox.hpp"
#include "screc/rng.hpp"
#include "screc/rpca.hpp"
#include "screc/support_set.hpp"
#include "screc/svd.hpp"
#include "screc/sweep.hpp"
#include "screc/tangent.hpp"
