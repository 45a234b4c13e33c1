#pragma once

// JSON instance files. Reals are written with 17 significant digits, so
// write -> read -> write reproduces the file byte for byte. Negative zero
// is written as 0.

#include <filesystem>
#include <string>
#include <string_view>

#include "safe_lsvi/mdp.hpp"

namespace safe_lsvi {

std::string instance_to_json(const MdpInstance& inst);

/// Throws ConfigError for malformed documents and ContractViolation when the
/// decoded instance fails validation.
MdpInstance instance_from_json(std::string_view text);

void write_instance(const MdpInstance& inst, const std::filesystem::path& path);
MdpInstance read_instance(const std::filesystem::path& path);

/// %.17g with -0 folded to 0; non-finite values are rejected.
std::string format_real(double x);

}  // namespace safe_lsvi
