#pragma once

#include "costar/ratfun.hpp"
#include "costar/vars.hpp"

#include <string>

namespace costar {

// Parse a rational-function expression in the variables of `vt` (plus the
// imaginary unit "i").  Momentum symbols are *not* in scope here; use the
// phase-space parser for functions on the cotangent chart.
RatFun parse_ratfun(const std::string& text, const VarTable& vt);

}  // namespace costar
