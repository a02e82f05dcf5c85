#pragma once

#include "bqc/bq_engine.hpp"
#include "bqc/cadmm.hpp"
#include "bqc/dense.hpp"
#include "bqc/ebq.hpp"
#include "bqc/experiments.hpp"
#include "bqc/graph.hpp"
#include "bqc/io.hpp"
#include "bqc/param_select.hpp"
#include "bqc/quantizer.hpp"
#include "bqc/rng.hpp"
#include "bqc/state_table.hpp"
