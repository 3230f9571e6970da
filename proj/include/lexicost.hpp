#pragma once

#include "lexicost/analytics.hpp"
#include "lexicost/bitset.hpp"
#include "lexicost/combiner.hpp"
#include "lexicost/cost.hpp"
#include "lexicost/engine.hpp"
#include "lexicost/errors.hpp"
#include "lexicost/evaluator.hpp"
#include "lexicost/generator.hpp"
#include "lexicost/kb.hpp"
#include "lexicost/suite.hpp"
