#pragma once

#include "beatlock/comb_model.hpp"
#include "beatlock/csv.hpp"
#include "beatlock/drift_noise.hpp"
#include "beatlock/errors.hpp"
#include "beatlock/lock_chain.hpp"
#include "beatlock/qubit_dynamics.hpp"
#include "beatlock/ramsey.hpp"
#include "beatlock/runner.hpp"
#include "beatlock/scenario.hpp"
#include "beatlock/seed.hpp"
#include "beatlock/spectral.hpp"
