#pragma once

#include "psbounds/bootstrap.hpp"
#include "psbounds/bounds.hpp"
#include "psbounds/cells.hpp"
#include "psbounds/covariates.hpp"
#include "psbounds/csv.hpp"
#include "psbounds/data.hpp"
#include "psbounds/dominance.hpp"
#include "psbounds/error.hpp"
#include "psbounds/inference.hpp"
#include "psbounds/parallel.hpp"
#include "psbounds/pipeline.hpp"
#include "psbounds/simulate.hpp"
#include "psbounds/strata.hpp"
#include "psbounds/trimming.hpp"
#include "psbounds/variance.hpp"
