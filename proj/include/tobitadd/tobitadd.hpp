#pragma once

#include "tobitadd/csv.hpp"
#include "tobitadd/errors.hpp"
#include "tobitadd/estimator.hpp"
#include "tobitadd/likelihood.hpp"
#include "tobitadd/model_io.hpp"
#include "tobitadd/model_selection.hpp"
#include "tobitadd/numeric.hpp"
#include "tobitadd/optimizer.hpp"
#include "tobitadd/simulation.hpp"
#include "tobitadd/splines.hpp"
