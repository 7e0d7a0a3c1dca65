#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace darkwire::cli {

/// Exit codes: 0 success, 1 failure (validation, no successful run), 2 missing config.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// `git hash-object` of a byte string: SHA-1 over "blob <size>\0<bytes>".
std::string git_blob_hash(const std::string& bytes);

}  // namespace darkwire::cli
