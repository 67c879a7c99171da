#pragma once

#include "zvrare/errors.hpp"
#include "zvrare/estimators.hpp"
#include "zvrare/kselect.hpp"
#include "zvrare/mixture.hpp"
#include "zvrare/model.hpp"
#include "zvrare/numeric.hpp"
#include "zvrare/oracle.hpp"
#include "zvrare/parallel.hpp"
#include "zvrare/pathdensity.hpp"
#include "zvrare/random.hpp"
#include "zvrare/tilt.hpp"
#include "zvrare/version.hpp"
