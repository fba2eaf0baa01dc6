#pragma once

#include "tiltwork/capacity.hpp"
#include "tiltwork/chain_emulator.hpp"
#include "tiltwork/chernoff.hpp"
#include "tiltwork/core.hpp"
#include "tiltwork/multi_constraint.hpp"
#include "tiltwork/numerics.hpp"
#include "tiltwork/oracle.hpp"
#include "tiltwork/rd_core.hpp"
