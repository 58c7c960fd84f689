#pragma once

#include <cstdint>
#include <cstring>
#include <string>

namespace congrob {

// FNV-1a 64-bit, used for layout provenance tags and output manifests.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::uint64_t h, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  return fnv1a64(&bits, sizeof(bits), h);
}

inline std::uint64_t fnv1a64(std::uint64_t h, std::uint64_t v) {
  return fnv1a64(&v, sizeof(v), h);
}

std::uint64_t hash_file(const std::string& path);
std::string hash_hex(std::uint64_t h);

}  // namespace congrob
