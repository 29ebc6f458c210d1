#pragma once

#include "riskctl/errors.hpp"
#include "riskctl/parallel.hpp"
#include "riskctl/rng.hpp"
#include "riskctl/scoredata.hpp"
#include "riskctl/concentration.hpp"
#include "riskctl/wordscore.hpp"
#include "riskctl/metrics.hpp"
#include "riskctl/calibration.hpp"
#include "riskctl/intervals.hpp"
#include "riskctl/riskcal.hpp"
#include "riskctl/simulate.hpp"
