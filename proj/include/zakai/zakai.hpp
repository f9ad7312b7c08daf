#pragma once

#include "zakai/diagnostics.hpp"
#include "zakai/distance.hpp"
#include "zakai/errors.hpp"
#include "zakai/families.hpp"
#include "zakai/grid.hpp"
#include "zakai/io.hpp"
#include "zakai/kalman.hpp"
#include "zakai/model.hpp"
#include "zakai/operators.hpp"
#include "zakai/particle.hpp"
#include "zakai/scenario.hpp"
#include "zakai/sde.hpp"
#include "zakai/solver.hpp"
#include "zakai/system.hpp"
