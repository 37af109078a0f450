#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fungible::cli {

/// Entry point behind the `fungible` executable. `args` excludes the program
/// name. Returns 0 on success, 1 on a numerical domain failure and 2 on a usage
/// or input error; diagnostics go to `err`, results to --out or `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fungible::cli
