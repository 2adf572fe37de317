#pragma once

#include <ostream>

namespace manicore::cli {

// Parses argv and runs one subcommand. Returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace manicore::cli
