#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cmn::cli {

enum Exit : int { kPass = 0, kFail = 1, kInvalid = 2 };

// Runs one command line (without the program name). Exit codes: 0 pass,
// 1 fail, inconclusive or unmet precondition, 2 invalid spec or I/O error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cmn::cli
