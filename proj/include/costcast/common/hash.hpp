#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace costcast {

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);

/// 16-character lowercase hex of fnv1a(data).
std::string fingerprint(std::string_view data);

}  // namespace costcast
