#pragma once

// Umbrella header for the whole library.

#include "shiftlens/bayesnet.hpp"
#include "shiftlens/diagram.hpp"
#include "shiftlens/dot.hpp"
#include "shiftlens/dsep.hpp"
#include "shiftlens/dsl.hpp"
#include "shiftlens/report.hpp"
#include "shiftlens/taxonomy.hpp"
#include "shiftlens/verify.hpp"
