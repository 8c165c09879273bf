#pragma once

#include "gridcast/arma.hpp"
#include "gridcast/bench.hpp"
#include "gridcast/data.hpp"
#include "gridcast/error.hpp"
#include "gridcast/lstm.hpp"
#include "gridcast/metrics.hpp"
#include "gridcast/multistep.hpp"
#include "gridcast/nar.hpp"
#include "gridcast/parallel.hpp"
#include "gridcast/svr.hpp"
