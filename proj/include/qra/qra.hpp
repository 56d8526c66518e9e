// qra.hpp — umbrella header

#pragma once

#include "qra/analysis.hpp"
#include "qra/bath.hpp"
#include "qra/dynamics.hpp"
#include "qra/errors.hpp"
#include "qra/mc_oracle.hpp"
#include "qra/modulation.hpp"
#include "qra/rates.hpp"
#include "qra/version.hpp"
