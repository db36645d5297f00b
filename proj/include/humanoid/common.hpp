#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace humanoid {

// Exit-code mapping: UsageError -> 1, DataError -> 2, InternalError -> 3.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InternalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Incremental FNV-1a, fixed-width little-endian feeds so hashes are
// stable across machines.
class Fnv1a64 {
 public:
  void feed_byte(uint8_t b) {
    h_ ^= b;
    h_ *= 0x100000001b3ULL;
  }
  void feed_u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) feed_byte(static_cast<uint8_t>(v >> (8 * i)));
  }
  void feed_i32(int32_t v) { feed_u32(static_cast<uint32_t>(v)); }
  void feed_u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) feed_byte(static_cast<uint8_t>(v >> (8 * i)));
  }
  void feed_str(std::string_view s) {
    feed_u64(s.size());
    for (char c : s) feed_byte(static_cast<uint8_t>(c));
  }
  uint64_t value() const { return h_; }

 private:
  uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::string hex64(uint64_t v);

}  // namespace humanoid
