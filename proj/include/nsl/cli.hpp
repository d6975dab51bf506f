#pragma once
#include <ostream>

namespace nsl {

// Exit codes: 0 pass, 1 check failed, 2 configuration or parse error, 3 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nsl
