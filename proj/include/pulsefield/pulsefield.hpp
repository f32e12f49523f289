#pragma once

#include "errors.hpp"
#include "numerics.hpp"
#include "oscillator.hpp"
#include "density.hpp"
#include "stationary.hpp"
#include "quantile.hpp"
#include "continuum.hpp"
#include "certification.hpp"
#include "finite_population.hpp"
#include "io.hpp"
#include "config.hpp"
#include "experiment.hpp"
