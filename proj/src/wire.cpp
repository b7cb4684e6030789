#include "lidc/wire.hpp"

#include <istream>
#include <ostream>

namespace lidc {

std::string_view to_string(ContentType type)
{
  switch (type) {
  case ContentType::Blob:
    return "blob";
  case ContentType::NoRoute:
    return "no-route";
  case ContentType::Error:
    return "error";
  }
  return "unknown";
}

namespace {

void append_length(Bytes& out, std::size_t len)
{
  if (len < 253) {
    out.push_back(static_cast<std::uint8_t>(len));
  }
  else if (len <= 0xFFFF) {
    out.push_back(0xFD);
    out.push_back(static_cast<std::uint8_t>(len >> 8));
    out.push_back(static_cast<std::uint8_t>(len));
  }
  else {
    out.push_back(0xFE);
    for (int shift = 24; shift >= 0; shift -= 8) {
      out.push_back(static_cast<std::uint8_t>(len >> shift));
    }
  }
}

void append_tlv(Bytes& out, std::uint8_t type, ByteView value)
{
  out.push_back(type);
  append_length(out, value.size());
  out.insert(out.end(), value.begin(), value.end());
}

Bytes minimal_uint(std::uint64_t value)
{
  Bytes out;
  int bytes = 1;
  while (bytes < 8 && (value >> (8 * bytes)) != 0) {
    ++bytes;
  }
  for (int i = bytes - 1; i >= 0; --i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
  return out;
}

Bytes finish(std::uint8_t type, const Bytes& body)
{
  Bytes out;
  append_tlv(out, type, body);
  if (out.size() > kMaxPacketSize) {
    throw WireError(WireErrc::PacketTooLarge, "packet exceeds 1 MiB");
  }
  return out;
}

struct Element
{
  std::uint8_t type;
  ByteView value;
  ByteView whole;
};

class Reader
{
public:
  explicit Reader(ByteView region)
    : m_region(region)
  {
  }

  bool at_end() const { return m_pos == m_region.size(); }

  Element next()
  {
    std::size_t start = m_pos;
    if (at_end()) {
      throw WireError(WireErrc::TruncatedPacket, "missing element");
    }
    std::uint8_t type = m_region[m_pos++];
    if (type >= 0xFD) {
      throw WireError(WireErrc::UnknownTlvType, "multi-byte TLV types are not supported");
    }
    std::size_t len = read_length();
    if (m_region.size() - m_pos < len) {
      throw WireError(WireErrc::TruncatedPacket, "declared length exceeds available bytes");
    }
    Element e{type, m_region.subspan(m_pos, len), m_region.subspan(start, m_pos - start + len)};
    m_pos += len;
    return e;
  }

  Element expect(std::uint8_t type)
  {
    auto e = next();
    if (e.type != type) {
      throw WireError(WireErrc::UnknownTlvType, "unexpected TLV type " + std::to_string(e.type));
    }
    return e;
  }

  std::uint8_t peek_type() const
  {
    if (at_end()) {
      throw WireError(WireErrc::TruncatedPacket, "missing element");
    }
    return m_region[m_pos];
  }

private:
  std::size_t need(std::size_t n)
  {
    if (m_region.size() - m_pos < n) {
      throw WireError(WireErrc::TruncatedPacket, "truncated length field");
    }
    std::size_t at = m_pos;
    m_pos += n;
    return at;
  }

  std::size_t read_length()
  {
    std::uint8_t first = m_region[need(1)];
    if (first < 253) {
      return first;
    }
    if (first == 0xFD) {
      auto at = need(2);
      std::size_t len = std::size_t{m_region[at]} << 8 | m_region[at + 1];
      if (len < 253) {
        throw WireError(WireErrc::LengthMismatch, "non-minimal length encoding");
      }
      return len;
    }
    if (first == 0xFE) {
      auto at = need(4);
      std::size_t len = 0;
      for (int i = 0; i < 4; ++i) {
        len = len << 8 | m_region[at + i];
      }
      if (len <= 0xFFFF) {
        throw WireError(WireErrc::LengthMismatch, "non-minimal length encoding");
      }
      return len;
    }
    throw WireError(WireErrc::LengthMismatch, "unsupported length form");
  }

  ByteView m_region;
  std::size_t m_pos = 0;
};

std::uint64_t decode_uint(ByteView value)
{
  if (value.empty() || value.size() > 8 || (value.size() > 1 && value[0] == 0)) {
    throw WireError(WireErrc::LengthMismatch, "non-canonical unsigned integer");
  }
  std::uint64_t v = 0;
  for (auto b : value) {
    v = v << 8 | b;
  }
  return v;
}

Name decode_name(ByteView value)
{
  std::vector<std::string> components;
  Reader r(value);
  while (!r.at_end()) {
    auto c = r.expect(tlv::kComponent);
    if (c.value.empty()) {
      throw WireError(WireErrc::LengthMismatch, "empty name component");
    }
    components.emplace_back(c.value.begin(), c.value.end());
  }
  return Name(std::move(components));
}

ByteView outer(ByteView wire, std::uint8_t type)
{
  if (wire.size() > kMaxPacketSize) {
    throw WireError(WireErrc::PacketTooLarge, "packet exceeds 1 MiB");
  }
  Reader r(wire);
  if (!r.at_end() && r.peek_type() != type) {
    throw WireError(WireErrc::UnknownTlvType, "unexpected outer TLV type");
  }
  auto e = r.expect(type);
  if (!r.at_end()) {
    throw WireError(WireErrc::LengthMismatch, "trailing bytes after packet");
  }
  return e.value;
}

void expect_end(const Reader& r)
{
  if (!r.at_end()) {
    throw WireError(WireErrc::LengthMismatch, "unexpected trailing elements");
  }
}

} // namespace

Bytes encode_name(const Name& name)
{
  Bytes body;
  for (const auto& c : name.components()) {
    append_tlv(body, tlv::kComponent, ByteView(reinterpret_cast<const std::uint8_t*>(c.data()), c.size()));
  }
  Bytes out;
  append_tlv(out, tlv::kName, body);
  return out;
}

Bytes encode_interest(const Interest& interest)
{
  Bytes body = encode_name(interest.name);
  std::uint8_t nonce[4] = {
    static_cast<std::uint8_t>(interest.nonce >> 24), static_cast<std::uint8_t>(interest.nonce >> 16),
    static_cast<std::uint8_t>(interest.nonce >> 8), static_cast<std::uint8_t>(interest.nonce)};
  append_tlv(body, tlv::kNonce, nonce);
  append_tlv(body, tlv::kLifetime, minimal_uint(interest.lifetime_ms));
  return finish(tlv::kInterest, body);
}

Interest decode_interest(ByteView wire)
{
  Reader r(outer(wire, tlv::kInterest));
  Interest out;
  out.name = decode_name(r.expect(tlv::kName).value);
  auto nonce = r.expect(tlv::kNonce).value;
  if (nonce.size() != 4) {
    throw WireError(WireErrc::LengthMismatch, "nonce must be 4 bytes");
  }
  out.nonce = std::uint32_t{nonce[0]} << 24 | std::uint32_t{nonce[1]} << 16 |
              std::uint32_t{nonce[2]} << 8 | nonce[3];
  out.lifetime_ms = decode_uint(r.expect(tlv::kLifetime).value);
  if (out.lifetime_ms == 0) {
    throw WireError(WireErrc::BadValue, "interest lifetime must be positive");
  }
  expect_end(r);
  return out;
}

DataPacket DataPacket::make(Name name, Bytes content, std::uint64_t freshness_ms, ContentType type)
{
  DataPacket d;
  d.name = std::move(name);
  d.content_type = type;
  d.content = std::move(content);
  d.freshness_ms = freshness_ms;
  d.digest = d.compute_digest();
  return d;
}

Digest DataPacket::compute_digest() const
{
  auto encoded = encode_name(name);
  return sha256({ByteView(encoded), ByteView(content)});
}

Bytes encode_data(const DataPacket& data)
{
  Bytes body = encode_name(data.name);
  append_tlv(body, tlv::kFreshness, minimal_uint(data.freshness_ms));
  if (data.content_type != ContentType::Blob) {
    append_tlv(body, tlv::kContentType, minimal_uint(static_cast<std::uint64_t>(data.content_type)));
  }
  append_tlv(body, tlv::kContent, data.content);
  append_tlv(body, tlv::kDigest, data.digest);
  return finish(tlv::kData, body);
}

DataPacket decode_data(ByteView wire)
{
  Reader r(outer(wire, tlv::kData));
  DataPacket out;
  auto name_el = r.expect(tlv::kName);
  out.name = decode_name(name_el.value);
  out.freshness_ms = decode_uint(r.expect(tlv::kFreshness).value);
  if (r.peek_type() == tlv::kContentType) {
    auto type = decode_uint(r.next().value);
    if (type != static_cast<std::uint64_t>(ContentType::NoRoute) &&
        type != static_cast<std::uint64_t>(ContentType::Error)) {
      throw WireError(WireErrc::BadValue, "unknown content type");
    }
    out.content_type = static_cast<ContentType>(type);
  }
  auto content = r.expect(tlv::kContent).value;
  out.content.assign(content.begin(), content.end());
  auto digest = r.expect(tlv::kDigest).value;
  if (digest.size() != out.digest.size()) {
    throw WireError(WireErrc::LengthMismatch, "digest must be 32 bytes");
  }
  std::copy(digest.begin(), digest.end(), out.digest.begin());
  expect_end(r);

  auto expected = sha256({name_el.whole, content});
  if (expected != out.digest) {
    throw WireError(WireErrc::DigestMismatch, "content digest mismatch");
  }
  return out;
}

Packet decode_packet(ByteView wire)
{
  if (wire.empty()) {
    throw WireError(WireErrc::TruncatedPacket, "empty packet");
  }
  switch (wire[0]) {
  case tlv::kInterest:
    return decode_interest(wire);
  case tlv::kData:
    return decode_data(wire);
  default:
    throw WireError(WireErrc::UnknownTlvType, "unknown packet type");
  }
}

void write_capture(std::ostream& os, std::span<const Bytes> packets)
{
  for (const auto& p : packets) {
    auto n = static_cast<std::uint32_t>(p.size());
    char prefix[4] = {static_cast<char>(n >> 24), static_cast<char>(n >> 16), static_cast<char>(n >> 8),
                      static_cast<char>(n)};
    os.write(prefix, 4);
    os.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size()));
  }
}

std::vector<Bytes> read_capture(std::istream& is)
{
  std::vector<Bytes> out;
  while (true) {
    unsigned char prefix[4];
    is.read(reinterpret_cast<char*>(prefix), 4);
    if (is.gcount() == 0) {
      break;
    }
    if (is.gcount() != 4) {
      throw WireError(WireErrc::TruncatedPacket, "truncated capture length prefix");
    }
    std::uint32_t n = std::uint32_t{prefix[0]} << 24 | std::uint32_t{prefix[1]} << 16 |
                      std::uint32_t{prefix[2]} << 8 | prefix[3];
    if (n > kMaxPacketSize) {
      throw WireError(WireErrc::PacketTooLarge, "captured packet exceeds 1 MiB");
    }
    Bytes packet(n);
    is.read(reinterpret_cast<char*>(packet.data()), n);
    if (static_cast<std::uint32_t>(is.gcount()) != n) {
      throw WireError(WireErrc::TruncatedPacket, "truncated captured packet");
    }
    out.push_back(std::move(packet));
  }
  return out;
}

} // namespace lidc
