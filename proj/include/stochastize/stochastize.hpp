#pragma once

#include "bindings.hpp"
#include "cme.hpp"
#include "codegen.hpp"
#include "errors.hpp"
#include "format.hpp"
#include "random.hpp"
#include "rational.hpp"
#include "scheme.hpp"
#include "sim.hpp"
#include "stochastizer.hpp"
#include "symcore.hpp"
