#pragma once

#include <cstdint>
#include <string_view>

namespace winofi {

// Stateless 64-bit mixer (splitmix64 finalizer). Distinct inputs give
// statistically independent outputs, which is all the injector needs:
// every random decision is keyed by coordinates, never by call order.
inline uint64_t mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline uint64_t mix64(uint64_t h, uint64_t v) { return mix64(h ^ v); }

// Counter-based stream: key fixes the stream, the counter walks it.
// Same key -> same sequence, independent of which thread draws it.
class RngStream {
 public:
  explicit RngStream(uint64_t key) : state_(key) {}

  static RngStream from_key(uint64_t seed, uint64_t trial_id, uint32_t layer_id,
                            uint32_t op_kind, uint64_t site_index,
                            uint32_t replica_index) {
    uint64_t h = mix64(seed, trial_id);
    h = mix64(h, layer_id);
    h = mix64(h, (static_cast<uint64_t>(op_kind) << 8) | replica_index);
    h = mix64(h, site_index);
    return RngStream(h);
  }

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in (0, 1]; never returns exactly 0 so log(u) is finite.
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

 private:
  uint64_t state_;
};

// Named sub-seed derivation so one experiment seed expands to independent
// per-module streams ("sweep", "tmr", ...). FNV-1a over the tag, mixed in.
inline uint64_t derive_seed(uint64_t seed, std::string_view tag) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return mix64(seed, h);
}

}  // namespace winofi
