#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dwe::cli {

/// Exit status of run_pipeline.
enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kParse = 3,
    kValidation = 4,
    kNumeric = 5,
    kIo = 6,
};

/// Runs one `dwe` invocation. `args` excludes the program name. Errors are reported on `err`
/// as a single JSON line {"error": <category>, "message": ...}.
int run_pipeline(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dwe::cli
