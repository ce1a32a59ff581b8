#pragma once

#include "robcov/estimators.hpp"
#include "robcov/experiments.hpp"
#include "robcov/io.hpp"
#include "robcov/linalg.hpp"
#include "robcov/rmt.hpp"
#include "robcov/rng.hpp"
#include "robcov/sampling.hpp"
#include "robcov/spectra.hpp"
#include "robcov/tolerances.hpp"
#include "robcov/weight_fn.hpp"
