#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace dwe {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 14695981039346656037ULL) noexcept;

/// 16-digit lowercase hex of fnv1a64(bytes).
std::string hash_hex(std::string_view bytes);

}  // namespace dwe
