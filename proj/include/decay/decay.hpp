#pragma once

#include "decay/benchmarks.hpp"
#include "decay/error.hpp"
#include "decay/gain_ops.hpp"
#include "decay/io.hpp"
#include "decay/omega_path.hpp"
#include "decay/sfp_solver.hpp"
#include "decay/triangulation.hpp"
