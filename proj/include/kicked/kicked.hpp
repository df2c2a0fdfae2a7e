#pragma once

// Umbrella header: classical, quantum, and measurement-interrupted dynamics
// of periodically kicked systems, plus the analysis and experiment layers.

#include "kicked/analysis.hpp"
#include "kicked/bessel.hpp"
#include "kicked/classical.hpp"
#include "kicked/config.hpp"
#include "kicked/errors.hpp"
#include "kicked/experiment.hpp"
#include "kicked/measured.hpp"
#include "kicked/observables.hpp"
#include "kicked/quantum.hpp"
#include "kicked/rng.hpp"
#include "kicked/system.hpp"
#include "kicked/version.hpp"
