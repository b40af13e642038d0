#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. args excludes the program name. Diagnostics go to err,
/// one line per problem; reports and progress go to out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qr::cli
