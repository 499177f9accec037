#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace corpusgate {

// 64-bit FNV-1a. Multi-byte integers are always fed little-endian so hashes
// are identical across platforms.
class Fnv1a {
 public:
  static constexpr uint64_t kOffsetBasis = 0xcbf29ce484222325ULL;
  static constexpr uint64_t kPrime = 0x100000001b3ULL;

  Fnv1a& bytes(std::string_view data) {
    for (unsigned char c : data) byte(c);
    return *this;
  }

  Fnv1a& byte(uint8_t b) {
    state_ ^= b;
    state_ *= kPrime;
    return *this;
  }

  Fnv1a& u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) byte(static_cast<uint8_t>(v >> (8 * i)));
    return *this;
  }

  Fnv1a& u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) byte(static_cast<uint8_t>(v >> (8 * i)));
    return *this;
  }

  Fnv1a& i32s(std::span<const int32_t> values) {
    for (int32_t v : values) u32(static_cast<uint32_t>(v));
    return *this;
  }

  uint64_t digest() const noexcept { return state_; }

 private:
  uint64_t state_ = kOffsetBasis;
};

inline uint64_t fnv1a(std::string_view data) { return Fnv1a{}.bytes(data).digest(); }

// Lower-case, zero-padded, 16 hex digits.
std::string hex64(uint64_t value);

}  // namespace corpusgate
