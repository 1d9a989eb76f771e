#pragma once

// Umbrella header.

#include "baselines.hpp"
#include "certificate.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "lbfgs.hpp"
#include "linalg.hpp"
#include "marginal.hpp"
#include "metrics.hpp"
#include "random.hpp"
#include "report.hpp"
#include "split.hpp"
#include "synth.hpp"
