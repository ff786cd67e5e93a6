#pragma once

#include "boundary.hpp"
#include "cayley.hpp"
#include "config.hpp"
#include "diagnostics.hpp"
#include "disk_density.hpp"
#include "expr.hpp"
#include "measure.hpp"
#include "operator.hpp"
#include "policy.hpp"
#include "quadrature.hpp"
#include "rational.hpp"
#include "self_map.hpp"
#include "spaces.hpp"
