#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lidc {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Simulated time in milliseconds.
using SimTime = std::int64_t;

using FaceId = std::uint32_t;

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

} // namespace lidc
