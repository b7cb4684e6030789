#pragma once

#include "lidc/common.hpp"
#include "lidc/digest.hpp"
#include "lidc/name.hpp"

#include <iosfwd>
#include <stdexcept>
#include <variant>

namespace lidc {

namespace tlv {

inline constexpr std::uint8_t kInterest = 0x05;
inline constexpr std::uint8_t kData = 0x06;
inline constexpr std::uint8_t kName = 0x07;
inline constexpr std::uint8_t kComponent = 0x08;
inline constexpr std::uint8_t kNonce = 0x0A;
inline constexpr std::uint8_t kLifetime = 0x0C;
inline constexpr std::uint8_t kFreshness = 0x14;
inline constexpr std::uint8_t kContent = 0x15;
inline constexpr std::uint8_t kDigest = 0x17;
inline constexpr std::uint8_t kContentType = 0x18;

} // namespace tlv

inline constexpr std::size_t kMaxPacketSize = 1024 * 1024;
inline constexpr std::uint64_t kDefaultLifetimeMs = 4000;

enum class WireErrc {
  TruncatedPacket,
  UnknownTlvType,
  LengthMismatch,
  DigestMismatch,
  PacketTooLarge,
  BadValue,
};

class WireError : public std::runtime_error
{
public:
  WireError(WireErrc code, const std::string& what)
    : std::runtime_error(what)
    , m_code(code)
  {
  }

  WireErrc code() const noexcept { return m_code; }

private:
  WireErrc m_code;
};

struct Interest
{
  Name name;
  std::uint32_t nonce = 0;
  std::uint64_t lifetime_ms = kDefaultLifetimeMs;

  friend bool operator==(const Interest&, const Interest&) = default;
};

/// Blob is the ordinary payload. NoRoute is the forwarder's negative acknowledgement,
/// Error carries an application-level error message.
enum class ContentType : std::uint8_t {
  Blob = 0,
  NoRoute = 1,
  Error = 2,
};

std::string_view to_string(ContentType type);

struct DataPacket
{
  Name name;
  ContentType content_type = ContentType::Blob;
  Bytes content;
  std::uint64_t freshness_ms = 0;
  /// SHA-256 over (encoded name TLV || content).
  Digest digest{};

  /// Builds a packet with its digest filled in.
  static DataPacket make(Name name, Bytes content, std::uint64_t freshness_ms,
                         ContentType type = ContentType::Blob);

  Digest compute_digest() const;

  std::string content_text() const { return to_string(ByteView(content)); }

  friend bool operator==(const DataPacket&, const DataPacket&) = default;
};

Bytes encode_name(const Name& name);

Bytes encode_interest(const Interest& interest);
Interest decode_interest(ByteView wire);

Bytes encode_data(const DataPacket& data);
/// Verifies the digest; throws WireError(DigestMismatch) on corruption.
DataPacket decode_data(ByteView wire);

using Packet = std::variant<Interest, DataPacket>;

/// Dispatches on the outer TLV type.
Packet decode_packet(ByteView wire);

/// Capture file: each packet prefixed by its length as a 4-byte big-endian integer.
void write_capture(std::ostream& os, std::span<const Bytes> packets);
std::vector<Bytes> read_capture(std::istream& is);

} // namespace lidc
