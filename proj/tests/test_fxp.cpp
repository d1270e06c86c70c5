#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "winofi/fxp.hpp"
#include "winofi/rng.hpp"

using namespace winofi;

TEST_CASE("quantize examples") {
  FxpFormat f{8, 6};
  CHECK(quantize_value(0.5, f) == 32);
  uint64_t sat = 0;
  CHECK(quantize_value(100.0, f, &sat) == 127);
  CHECK(sat == 1);
  CHECK(quantize_value(-100.0, f) == -128);
  // round-to-nearest-even on exact halves (values in raw units / 2^6)
  CHECK(quantize_value(1.5 / 64.0, f) == 2);
  CHECK(quantize_value(2.5 / 64.0, f) == 2);
  CHECK(quantize_value(3.5 / 64.0, f) == 4);
}

TEST_CASE("quantize ramp round-trip error bound") {
  FxpFormat f{8, 6};
  double max_err = 0.0;
  for (int i = 0; i < 256; ++i) {
    double v = -1.0 + 2.0 * i / 256.0;  // [-1, 1)
    int32_t raw = quantize_value(v, f);
    max_err = std::max(max_err, std::fabs(dequantize_value(raw, f) - v));
  }
  CHECK(max_err <= std::pow(2.0, -f.frac_bits - 1));
}

TEST_CASE("quantize-dequantize idempotent on raw codes") {
  for (FxpFormat f : {FxpFormat{8, 5}, FxpFormat{8, 6}, FxpFormat{16, 10}}) {
    int step = f.word_bits == 8 ? 1 : 37;
    for (int64_t raw = f.raw_min(); raw <= f.raw_max(); raw += step)
      CHECK(quantize_value(dequantize_value(raw, f), f) == raw);
  }
}

TEST_CASE("fxp_mul examples and exhaustive int8 oracle") {
  DatapathSpec dp = DatapathSpec::for_format(FxpFormat::int8_default());
  CHECK(fxp_mul(2, 3, dp) == 6);
  CHECK(fxp_mul(-128, -128, dp) == 16384);
  CHECK(fits_bits(16384, 16));
  for (int a = -128; a <= 127; ++a)
    for (int b = -128; b <= 127; ++b) {
      int64_t p = fxp_mul(a, b, dp);
      REQUIRE(p == static_cast<int64_t>(a) * b);
      REQUIRE(fits_bits(p, dp.mul_out_bits));
    }
}

TEST_CASE("fxp_add wraps at accumulator width") {
  DatapathSpec dp{16, 32, true};
  CHECK(fxp_add(1, -1, dp) == 0);
  CHECK(fxp_add((int64_t{1} << 31) - 1, 1, dp) == -(int64_t{1} << 31));
  // random pairs against arithmetic mod 2^32 done in unsigned space
  RngStream rng(2024);
  for (int i = 0; i < 100000; ++i) {
    int64_t a = wrap_to_bits(static_cast<int64_t>(rng.next_u64()), 32);
    int64_t b = wrap_to_bits(static_cast<int64_t>(rng.next_u64()), 32);
    uint32_t expect = static_cast<uint32_t>(a) + static_cast<uint32_t>(b);
    REQUIRE(static_cast<uint32_t>(fxp_add(a, b, dp)) == expect);
    REQUIRE(fits_bits(fxp_add(a, b, dp), 32));
  }
}

TEST_CASE("fxp_add associative and commutative at fixed width") {
  DatapathSpec dp{16, 32, true};
  RngStream rng(7);
  for (int i = 0; i < 20000; ++i) {
    int64_t a = wrap_to_bits(static_cast<int64_t>(rng.next_u64()), 32);
    int64_t b = wrap_to_bits(static_cast<int64_t>(rng.next_u64()), 32);
    int64_t c = wrap_to_bits(static_cast<int64_t>(rng.next_u64()), 32);
    REQUIRE(fxp_add(a, b, dp) == fxp_add(b, a, dp));
    REQUIRE(fxp_add(fxp_add(a, b, dp), c, dp) == fxp_add(a, fxp_add(b, c, dp), dp));
  }
}

TEST_CASE("requantize examples") {
  FxpFormat out8{8, 6};
  CHECK(requantize(256, 12, out8) == 4);
  uint64_t sat = 0;
  CHECK(requantize(int64_t{1} << 20, 12, out8, &sat) == 127);
  CHECK(sat == 1);
  FxpFormat wide{16, 0};
  CHECK(requantize(5, 1, wide) == 3);    // round half up
  CHECK(requantize(-5, 1, wide) == -2);  // toward +inf on the half
  CHECK(requantize(7, 0, wide) == 7);    // shift 0 passes through
}

TEST_CASE("multiply by one then requantize is identity") {
  for (FxpFormat f : {FxpFormat{8, 5}, FxpFormat{16, 10}}) {
    REQUIRE(f.one_representable());
    DatapathSpec dp = DatapathSpec::for_format(f);
    int64_t step = f.word_bits == 8 ? 1 : 97;
    for (int64_t x = f.raw_min(); x <= f.raw_max(); x += step) {
      int64_t p = fxp_mul(x, f.one_raw(), dp);
      CHECK(requantize(p, 2 * f.frac_bits, f) == x);
    }
  }
}
