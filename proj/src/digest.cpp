#include "lidc/digest.hpp"

#include <openssl/evp.h>

#include <memory>
#include <stdexcept>

namespace lidc {

Digest sha256(std::initializer_list<ByteView> parts)
{
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest init failed");
  }
  for (const auto& part : parts) {
    if (!part.empty() && EVP_DigestUpdate(ctx.get(), part.data(), part.size()) != 1) {
      throw std::runtime_error("sha256: digest update failed");
    }
  }
  Digest out{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != out.size()) {
    throw std::runtime_error("sha256: digest final failed");
  }
  return out;
}

std::string to_hex(ByteView bytes)
{
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0F]);
  }
  return out;
}

namespace {

int hex_value(char c)
{
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

} // namespace

Bytes from_hex(std::string_view hex)
{
  if (hex.size() % 2 != 0) {
    throw std::invalid_argument("odd-length hex string");
  }
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_value(hex[i]);
    int lo = hex_value(hex[i + 1]);
    if (hi < 0 || lo < 0) {
      throw std::invalid_argument("invalid hex digit");
    }
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

Bytes expand_stream(const Digest& seed, std::size_t length)
{
  Bytes out;
  out.reserve(length);
  std::uint64_t counter = 0;
  while (out.size() < length) {
    std::array<std::uint8_t, 8> ctr{};
    for (int i = 0; i < 8; ++i) {
      ctr[i] = static_cast<std::uint8_t>(counter >> (56 - 8 * i));
    }
    auto block = sha256({ByteView(seed), ByteView(ctr)});
    std::size_t take = std::min(block.size(), length - out.size());
    out.insert(out.end(), block.begin(), block.begin() + static_cast<std::ptrdiff_t>(take));
    ++counter;
  }
  return out;
}

} // namespace lidc
