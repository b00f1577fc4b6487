#pragma once

#include "consim/bench/config.hpp"
#include "consim/bench/fit.hpp"
#include "consim/bench/plot.hpp"
#include "consim/bench/sweep.hpp"
#include "consim/bench/table.hpp"
#include "consim/consensus.hpp"
#include "consim/error.hpp"
#include "consim/graph.hpp"
#include "consim/metering.hpp"
#include "consim/protocols/averaging.hpp"
#include "consim/protocols/flooding.hpp"
#include "consim/protocols/ghs.hpp"
#include "consim/report.hpp"
#include "consim/runtime.hpp"
#include "consim/sizing.hpp"
#include "consim/theory.hpp"
#include "consim/trace.hpp"
#include "consim/trace_io.hpp"
