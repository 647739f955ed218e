// Umbrella header.
#pragma once

#include "mixsamp/analysis.hpp"
#include "mixsamp/common.hpp"
#include "mixsamp/idealball.hpp"
#include "mixsamp/opcalc.hpp"
#include "mixsamp/protocols.hpp"
#include "mixsamp/qcore.hpp"
#include "mixsamp/symmetry.hpp"
