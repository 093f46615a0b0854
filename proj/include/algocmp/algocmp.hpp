#pragma once

#include "algocmp/errors.hpp"
#include "algocmp/random.hpp"
#include "algocmp/distributions.hpp"
#include "algocmp/design.hpp"
#include "algocmp/paired_estimators.hpp"
#include "algocmp/subprocess.hpp"
#include "algocmp/tsp_demo.hpp"
#include "algocmp/algorithm_interface.hpp"
#include "algocmp/adaptive_sampler.hpp"
#include "algocmp/hypothesis_tests.hpp"
#include "algocmp/journal.hpp"
#include "algocmp/experiment.hpp"
#include "algocmp/config.hpp"
#include "algocmp/report.hpp"
