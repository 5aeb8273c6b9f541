#include "crossfuzz/hash.hpp"

namespace crossfuzz {

std::string to_hex(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xf];
    value >>= 4;
  }
  return out;
}

std::string Fnv1a::hex() const { return to_hex(state_); }

}  // namespace crossfuzz
