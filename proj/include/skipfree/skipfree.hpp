#pragma once

#include "chain_model.hpp"
#include "conditions.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "inequality_lab.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "scale_function.hpp"
#include "simulator.hpp"
