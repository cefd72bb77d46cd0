#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace geoload {

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

/// 16 lowercase hex digits of fnv1a(bytes).
std::string hash_hex(std::string_view bytes);

}  // namespace geoload
