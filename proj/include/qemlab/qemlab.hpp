#pragma once

#include "qemlab/cli.hpp"
#include "qemlab/conditioned_mc.hpp"
#include "qemlab/config.hpp"
#include "qemlab/dynamics.hpp"
#include "qemlab/equilibrium.hpp"
#include "qemlab/error.hpp"
#include "qemlab/filtration.hpp"
#include "qemlab/geometry.hpp"
#include "qemlab/grid.hpp"
#include "qemlab/io.hpp"
#include "qemlab/parallel.hpp"
#include "qemlab/rng.hpp"
#include "qemlab/spectral.hpp"
#include "qemlab/ulam.hpp"
