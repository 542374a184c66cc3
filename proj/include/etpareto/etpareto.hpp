#pragma once

#include "etpareto/errors.hpp"
#include "etpareto/linalg.hpp"
#include "etpareto/rng.hpp"
#include "etpareto/gaussian.hpp"
#include "etpareto/et_filter.hpp"
#include "etpareto/scenario.hpp"
#include "etpareto/plant.hpp"
#include "etpareto/mdp.hpp"
#include "etpareto/parallel.hpp"
#include "etpareto/abstraction.hpp"
#include "etpareto/mo_solver.hpp"
#include "etpareto/harness.hpp"
