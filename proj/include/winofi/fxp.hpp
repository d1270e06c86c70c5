#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "winofi/error.hpp"

namespace winofi {

// Two's-complement fixed point: real value = raw * 2^-frac_bits.
struct FxpFormat {
  int word_bits = 16;
  int frac_bits = 10;

  int64_t raw_min() const { return -(int64_t{1} << (word_bits - 1)); }
  int64_t raw_max() const { return (int64_t{1} << (word_bits - 1)) - 1; }
  double scale() const { return static_cast<double>(int64_t{1} << frac_bits); }
  // Raw encoding of 1.0 when representable (frac_bits <= word_bits - 2).
  bool one_representable() const { return frac_bits <= word_bits - 2; }
  int64_t one_raw() const { return int64_t{1} << frac_bits; }

  bool valid() const {
    return (word_bits == 8 || word_bits == 16) && frac_bits >= 0 &&
           frac_bits < word_bits;
  }
  bool operator==(const FxpFormat&) const = default;

  static FxpFormat int8_default() { return {8, 5}; }
  static FxpFormat int16_default() { return {16, 10}; }
};

// Widths of the words a fault can corrupt: products on a mul_out_bits bus,
// accumulator words at acc_bits. The accumulator wraps; saturation happens
// only at requantize.
struct DatapathSpec {
  int mul_out_bits = 32;
  int acc_bits = 32;
  bool wrap_on_overflow = true;

  bool valid() const {
    return mul_out_bits > 0 && acc_bits > 0 && mul_out_bits <= acc_bits &&
           acc_bits <= 64;
  }
  bool operator==(const DatapathSpec&) const = default;

  static DatapathSpec for_format(const FxpFormat& f) {
    return {2 * f.word_bits, 32, true};
  }
};

struct FxpTensor {
  std::vector<int> shape;
  std::vector<int32_t> data;  // flat, row-major raw words
  FxpFormat format;

  FxpTensor() = default;
  FxpTensor(std::vector<int> s, FxpFormat f);

  size_t numel() const;
  bool shape_equals(const FxpTensor& other) const { return shape == other.shape; }
  bool operator==(const FxpTensor&) const = default;
};

// Reinterpret v as a `bits`-wide two's-complement word (sign-extended).
inline int64_t wrap_to_bits(int64_t v, int bits) {
  if (bits >= 64) return v;
  uint64_t u = static_cast<uint64_t>(v) << (64 - bits);
  return static_cast<int64_t>(u) >> (64 - bits);
}

inline bool fits_bits(int64_t v, int bits) { return wrap_to_bits(v, bits) == v; }

// Round-to-nearest-even of value * 2^frac, saturated to the format range.
int32_t quantize_value(double value, const FxpFormat& fmt, uint64_t* saturations = nullptr);
FxpTensor quantize(std::span<const double> values, std::vector<int> shape,
                   const FxpFormat& fmt, uint64_t* saturations = nullptr);
double dequantize_value(int64_t raw, const FxpFormat& fmt);
std::vector<double> dequantize(const FxpTensor& t);

// Exact product; mul_out_bits = 2*word_bits cannot overflow for word inputs.
inline int64_t fxp_mul(int64_t a, int64_t b, const DatapathSpec&) { return a * b; }

// Two's-complement sum at acc_bits; wraps on overflow (counted by caller
// via the return-vs-ideal comparison when it cares).
inline int64_t fxp_add(int64_t a, int64_t b, const DatapathSpec& dp) {
  int64_t s = static_cast<int64_t>(static_cast<uint64_t>(a) + static_cast<uint64_t>(b));
  return wrap_to_bits(s, dp.acc_bits);
}

// Arithmetic shift by (in_frac - out.frac_bits) with round-half-up on the
// dropped bits, then saturate to the output range.
int32_t requantize(int64_t v, int in_frac, const FxpFormat& out,
                   uint64_t* saturations = nullptr);

}  // namespace winofi
