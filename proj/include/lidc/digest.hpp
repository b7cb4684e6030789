#pragma once

#include "lidc/common.hpp"

#include <array>
#include <initializer_list>
#include <string>

namespace lidc {

using Digest = std::array<std::uint8_t, 32>;

/// SHA-256 over the concatenation of all parts.
Digest sha256(std::initializer_list<ByteView> parts);

inline Digest sha256(ByteView data) { return sha256({data}); }

std::string to_hex(ByteView bytes);

inline std::string to_hex(const Digest& d) { return to_hex(ByteView(d)); }

/// Parses lowercase or uppercase hex; throws std::invalid_argument on bad input.
Bytes from_hex(std::string_view hex);

/// Deterministic byte stream: SHA-256(seed || counter) blocks, counter big-endian.
Bytes expand_stream(const Digest& seed, std::size_t length);

} // namespace lidc
