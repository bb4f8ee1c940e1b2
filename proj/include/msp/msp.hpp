#pragma once

#include "msp/common.hpp"
#include "msp/parallel.hpp"
#include "msp/dense.hpp"
#include "msp/sparse.hpp"
#include "msp/matrix_market.hpp"
#include "msp/coloring.hpp"
#include "msp/smoothers.hpp"
#include "msp/amg.hpp"
#include "msp/krylov.hpp"
#include "msp/multistage.hpp"
#include "msp/problems.hpp"
#include "msp/benchmark.hpp"
