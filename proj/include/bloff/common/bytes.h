#ifndef BLOFF_COMMON_BYTES_H_
#define BLOFF_COMMON_BYTES_H_

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bloff {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const uint8_t*>(s.data()), s.size()};
}

inline std::string to_string(ByteView b) {
  return {reinterpret_cast<const char*>(b.data()), b.size()};
}

// Lowercase hex, two characters per byte.
std::string to_hex(ByteView bytes);

// Strict decoder: even length, lowercase [0-9a-f] only. Uppercase is
// rejected so every byte string has exactly one textual form.
std::optional<Bytes> from_hex(std::string_view hex);

// Fixed-width byte value. The tag keeps digests, keys and signatures from
// being mixed up even though they share a representation.
template <size_t N, typename Tag>
class FixedBytes {
 public:
  static constexpr size_t kSize = N;

  constexpr FixedBytes() : data_{} {}
  explicit constexpr FixedBytes(const std::array<uint8_t, N>& data)
      : data_(data) {}

  // Returns nullopt unless |bytes| is exactly N long.
  static std::optional<FixedBytes> from_span(ByteView bytes) {
    if (bytes.size() != N)
      return std::nullopt;
    FixedBytes out;
    std::memcpy(out.data_.data(), bytes.data(), N);
    return out;
  }

  static std::optional<FixedBytes> from_hex(std::string_view hex) {
    if (hex.size() != 2 * N)
      return std::nullopt;
    auto raw = ::bloff::from_hex(hex);
    if (!raw)
      return std::nullopt;
    return from_span(*raw);
  }

  std::string hex() const { return to_hex(data_); }
  ByteView span() const { return data_; }
  const uint8_t* data() const { return data_.data(); }
  uint8_t* data() { return data_.data(); }
  constexpr size_t size() const { return N; }
  uint8_t operator[](size_t i) const { return data_[i]; }
  uint8_t& operator[](size_t i) { return data_[i]; }

  bool is_zero() const {
    for (uint8_t b : data_)
      if (b != 0)
        return false;
    return true;
  }

  friend auto operator<=>(const FixedBytes&, const FixedBytes&) = default;
  friend bool operator==(const FixedBytes&, const FixedBytes&) = default;

 private:
  std::array<uint8_t, N> data_;
};

struct FixedBytesHash {
  template <size_t N, typename Tag>
  size_t operator()(const FixedBytes<N, Tag>& v) const {
    size_t h = 0;
    std::memcpy(&h, v.data(), sizeof(h) < N ? sizeof(h) : N);
    return h;
  }
};

// Append-only big-endian encoder for the canonical layouts.
class ByteWriter {
 public:
  void u8(uint8_t v) { out_.push_back(v); }
  void u32be(uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8)
      out_.push_back(static_cast<uint8_t>(v >> shift));
  }
  void u64be(uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8)
      out_.push_back(static_cast<uint8_t>(v >> shift));
  }
  void bytes(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }

  const Bytes& data() const& { return out_; }
  Bytes take() && { return std::move(out_); }

 private:
  Bytes out_;
};

// Bounds-checked reader; every read past the end throws Error("truncated").
class ByteReader {
 public:
  explicit ByteReader(ByteView in) : in_(in) {}

  uint8_t u8();
  uint32_t u32be();
  uint64_t u64be();
  ByteView take(size_t n);

  template <typename Fixed>
  Fixed fixed() {
    return *Fixed::from_span(take(Fixed::kSize));
  }

  size_t remaining() const { return in_.size() - pos_; }
  bool done() const { return pos_ == in_.size(); }
  // Throws Error("trailing-bytes") unless the input was fully consumed.
  void expect_done() const;

 private:
  ByteView in_;
  size_t pos_ = 0;
};

}  // namespace bloff

#endif  // BLOFF_COMMON_BYTES_H_
