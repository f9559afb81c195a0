#pragma once

#include <iosfwd>

namespace biaslab {

// Entry point of the `biaslab` tool: generate | train | evaluate | explain |
// analyze {coverage,association,brush} | sweep-imbalance | serve.
// Returns the process exit code; diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace biaslab
