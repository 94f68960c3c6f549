#pragma once

namespace smoothrace {

// Training arithmetic is 32-bit. The gradient-check build compiles the same
// sources with SMOOTHRACE_REAL_DOUBLE to get a 64-bit engine.
#ifdef SMOOTHRACE_REAL_DOUBLE
using Real = double;
#else
using Real = float;
#endif

}  // namespace smoothrace
