#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace safe_lsvi::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitBadConfig = 2;
inline constexpr int kExitConsistency = 3;

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Output directory: --out, else $SAFE_LSVI_OUT_DIR, else ./out.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "0..9" (inclusive range) or "1,4,7".
std::vector<unsigned long long> parse_seed_list(const std::string& text);

}  // namespace safe_lsvi::cli
