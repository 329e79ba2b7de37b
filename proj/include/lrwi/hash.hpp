#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace lrwi {

// FNV-1a, used for config hashes in manifests and operator identity tags.
// Not cryptographic; only has to be stable and cheap.
inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;

// The byte-level routine is named apart from the string_view one: a string
// literal would otherwise convert to const void* (a standard conversion,
// preferred over the string_view constructor) and land in the wrong slot.
inline std::uint64_t fnv1a_bytes(const void* data, std::size_t n,
                                 std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = kFnvOffset) {
  return fnv1a_bytes(s.data(), s.size(), h);
}

inline std::uint64_t fnv1a_append(std::uint64_t h, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  return fnv1a_bytes(&bits, sizeof bits, h);
}

inline std::string hex64(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return s;
}

}  // namespace lrwi
