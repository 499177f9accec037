#pragma once

#include <iosfwd>

namespace corpusgate::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kBackendOrIo = 3,
};

// Entry point of the `corpusgate` binary. Data goes to `out`, logs and
// diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace corpusgate::cli
