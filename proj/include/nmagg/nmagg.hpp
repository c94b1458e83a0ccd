#pragma once

#include "errors.hpp"
#include "grid.hpp"
#include "field.hpp"
#include "spectral.hpp"
#include "kernel.hpp"
#include "potential.hpp"
#include "mixture.hpp"
#include "stepper.hpp"
#include "diagnostics.hpp"
#include "experiments.hpp"
#include "config.hpp"
#include "io.hpp"
#include "runner.hpp"
