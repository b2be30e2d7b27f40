#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace lf::core {

// 64-bit FNV-1a.
class Fnv1a {
 public:
  void update(std::string_view bytes);
  void update(std::span<const double> values);
  void update_u64(std::uint64_t v);
  std::uint64_t digest() const noexcept { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hash_hex(std::string_view bytes);

}  // namespace lf::core
