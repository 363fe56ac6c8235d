#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace causalreach {

/// 64-bit FNV-1a, rendered as 16 hex digits. Used to stamp reports and grids
/// with the configuration that produced them.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex_digest(std::string_view bytes);

}  // namespace causalreach
