#include "lf/core/hash.hpp"

#include <cstring>
#include <cstdio>

namespace lf::core {

void Fnv1a::update(std::string_view bytes) {
  for (unsigned char c : bytes) {
    state_ ^= c;
    state_ *= 0x100000001b3ULL;
  }
}

void Fnv1a::update_u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    state_ ^= static_cast<unsigned char>(v >> (8 * i));
    state_ *= 0x100000001b3ULL;
  }
}

void Fnv1a::update(std::span<const double> values) {
  for (double d : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    update_u64(bits);
  }
}

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

std::string hash_hex(std::string_view bytes) {
  Fnv1a h;
  h.update(bytes);
  return h.hex();
}

}  // namespace lf::core
