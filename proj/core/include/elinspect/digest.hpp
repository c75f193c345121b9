#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace elinspect {

/// Incremental FNV-1a 64-bit hash. Used for config digests and feature-cache
/// keys; provenance, not security.
class Fnv1a {
public:
  Fnv1a& update(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Fnv1a& update(std::string_view s) { return update(s.data(), s.size()); }

  std::uint64_t value() const { return state_; }

  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = state_;
    for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return out;
  }

private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace elinspect
