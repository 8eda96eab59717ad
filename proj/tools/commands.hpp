#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace handshape::cli {

/// Entry point of the `handshape` tool. `args` excludes the program name.
/// Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace handshape::cli
