#include "bloff/common/bytes.h"

#include "bloff/common/error.h"

namespace bloff {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9')
    return c - '0';
  if (c >= 'a' && c <= 'f')
    return c - 'a' + 10;
  return -1;
}

}  // namespace

std::string to_hex(ByteView bytes) {
  std::string out;
  out.reserve(bytes.size() * 2);
  for (uint8_t b : bytes) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0x0f]);
  }
  return out;
}

std::optional<Bytes> from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0)
    return std::nullopt;
  Bytes out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_value(hex[i]);
    int lo = hex_value(hex[i + 1]);
    if (hi < 0 || lo < 0)
      return std::nullopt;
    out.push_back(static_cast<uint8_t>((hi << 4) | lo));
  }
  return out;
}

uint8_t ByteReader::u8() {
  return take(1)[0];
}

uint32_t ByteReader::u32be() {
  ByteView b = take(4);
  uint32_t v = 0;
  for (uint8_t x : b)
    v = (v << 8) | x;
  return v;
}

uint64_t ByteReader::u64be() {
  ByteView b = take(8);
  uint64_t v = 0;
  for (uint8_t x : b)
    v = (v << 8) | x;
  return v;
}

ByteView ByteReader::take(size_t n) {
  if (n > remaining())
    throw Error("truncated", "needed " + std::to_string(n) + " bytes, have " +
                                 std::to_string(remaining()));
  ByteView out = in_.subspan(pos_, n);
  pos_ += n;
  return out;
}

void ByteReader::expect_done() const {
  if (!done())
    throw Error("trailing-bytes", std::to_string(remaining()) + " unread");
}

}  // namespace bloff
