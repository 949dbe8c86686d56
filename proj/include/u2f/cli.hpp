#pragma once

#include <iosfwd>

namespace u2f {

/// Exit codes: 0 success, 1 domain error (including a run that ended
/// Failed or a diverging replay), 2 usage error.
int dispatch(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

} // namespace u2f
