#pragma once

#include <iosfwd>

namespace scenemem::memctl {

// Entry point of the memctl tool. Exit codes: 0 success, 1 runtime failure
// (a single `error: {json}` line on err), 2 usage error (usage text on err).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace scenemem::memctl
