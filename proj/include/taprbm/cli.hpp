#pragma once

namespace taprbm {

/// Command-line front end. Returns the process exit status:
///   0 success, 2 usage error, 3 data/model I/O failure, 4 numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace taprbm
