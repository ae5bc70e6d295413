#pragma once

#include <string>
#include <string_view>

namespace tds {

inline constexpr std::string_view kHashAlgorithm = "sha256";

/// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view data);

}  // namespace tds
