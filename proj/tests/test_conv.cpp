#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <vector>

#include "support/oracles.hpp"
#include "winofi/conv.hpp"
#include "winofi/rng.hpp"

using namespace winofi;
using oracles::RationalWinograd;

namespace {

FxpTensor random_tensor(std::vector<int> shape, FxpFormat fmt, RngStream& rng, int64_t bound) {
  FxpTensor t(std::move(shape), fmt);
  for (auto& v : t.data)
    v = static_cast<int32_t>(static_cast<int64_t>(rng.next_u64() % (2 * bound + 1)) - bound);
  return t;
}

}  // namespace

TEST_CASE("transform constants satisfy the winograd identity over rationals") {
  RngStream rng(404);
  for (int trial = 0; trial < 2000; ++trial) {
    int64_t d[16], g[9];
    for (auto& v : d) v = static_cast<int64_t>(rng.next_u64() % 2001) - 1000;
    for (auto& v : g) v = static_cast<int64_t>(rng.next_u64() % 2001) - 1000;
    auto lhs = RationalWinograd::conv4(d, g);
    auto rhs = oracles::correlate_2x2(d, g);
    for (int i = 0; i < 4; ++i) REQUIRE(lhs[i] == 4 * rhs[i]);
  }
}

TEST_CASE("filter transform equals the rational oracle exactly") {
  FxpFormat fmt = FxpFormat::int8_default();
  DatapathSpec dp = DatapathSpec::for_format(fmt);
  WgSiteMap map{1, 1, 1};
  IdentityHook hook;

  SUBCASE("zero filter") {
    int32_t g[9] = {};
    auto u = winograd_filter_transform(g, dp, map, 0, 0, hook);
    for (int64_t v : u) CHECK(v == 0);
  }
  SUBCASE("center delta lands on quarter-grid values") {
    int32_t g[9] = {0, 0, 0, 0, 1, 0, 0, 0, 0};
    auto u = winograd_filter_transform(g, dp, map, 0, 0, hook);
    // at +2 frac bits, {0, +-1/4, +-1/2} appear as {0, +-1, +-2}
    for (int64_t v : u) CHECK((v == 0 || v == 1 || v == -1 || v == 2 || v == -2));
    int64_t gl[9] = {0, 0, 0, 0, 1, 0, 0, 0, 0};
    auto expect = RationalWinograd::filter4(gl);
    for (int i = 0; i < 16; ++i) CHECK(u[i] == expect[i]);
  }
  SUBCASE("random filters") {
    RngStream rng(11);
    for (int trial = 0; trial < 500; ++trial) {
      int32_t g[9];
      int64_t gl[9];
      for (int i = 0; i < 9; ++i) {
        g[i] = static_cast<int32_t>(rng.next_u64() % 255) - 127;
        gl[i] = g[i];
      }
      auto u = winograd_filter_transform(g, dp, map, 0, 0, hook);
      auto expect = RationalWinograd::filter4(gl);
      for (int i = 0; i < 16; ++i) REQUIRE(u[i] == expect[i]);
    }
  }
}

TEST_CASE("input and output transforms equal the rational oracle") {
  FxpFormat fmt = FxpFormat::int8_default();
  DatapathSpec dp = DatapathSpec::for_format(fmt);
  WgSiteMap map{1, 1, 1};
  IdentityHook hook;
  RngStream rng(12);

  SUBCASE("zero and ones input tiles") {
    int64_t zero[16] = {};
    auto v0 = winograd_input_transform(zero, dp, map, 0, 0, hook);
    for (int64_t v : v0) CHECK(v == 0);
    int64_t ones[16];
    for (auto& x : ones) x = 1;
    auto v1 = winograd_input_transform(ones, dp, map, 0, 0, hook);
    auto expect = RationalWinograd::input(ones);
    for (int i = 0; i < 16; ++i) CHECK(v1[i] == expect[i]);
  }
  SUBCASE("random tiles, both transforms") {
    for (int trial = 0; trial < 500; ++trial) {
      int64_t d[16];
      for (auto& x : d) x = static_cast<int64_t>(rng.next_u64() % 255) - 127;
      auto v = winograd_input_transform(d, dp, map, 0, 0, hook);
      auto ev = RationalWinograd::input(d);
      for (int i = 0; i < 16; ++i) REQUIRE(v[i] == ev[i]);

      std::array<int64_t, 16> m;
      for (auto& x : m) x = static_cast<int64_t>(rng.next_u64() % 20001) - 10000;
      auto y = winograd_output_transform(m, dp, map, 0, 0, hook);
      auto ey = RationalWinograd::output(m);
      for (int i = 0; i < 4; ++i) REQUIRE(y[i] == ey[i]);
    }
  }
  SUBCASE("single nonzero M entry spreads per the output pattern") {
    std::array<int64_t, 16> m{};
    m[5] = 1000;  // row 1, col 1
    auto y = winograd_output_transform(m, dp, map, 0, 0, hook);
    auto ey = RationalWinograd::output(m);
    for (int i = 0; i < 4; ++i) CHECK(y[i] == ey[i]);
    CHECK(y[0] == 1000);
  }
}

TEST_CASE("elementwise accumulate sums channels") {
  FxpFormat fmt = FxpFormat::int8_default();
  DatapathSpec dp = DatapathSpec::for_format(fmt);
  WgSiteMap map{1, 2, 1};
  IdentityHook hook;
  RngStream rng(13);
  std::array<int64_t, 16> u0, u1, v0, v1;
  for (int i = 0; i < 16; ++i) {
    u0[i] = static_cast<int64_t>(rng.next_u64() % 201) - 100;
    u1[i] = static_cast<int64_t>(rng.next_u64() % 201) - 100;
    v0[i] = static_cast<int64_t>(rng.next_u64() % 201) - 100;
    v1[i] = static_cast<int64_t>(rng.next_u64() % 201) - 100;
  }
  std::array<int64_t, 16> m{};
  winograd_elementwise_accumulate(m, u0, v0, dp, map, 0, 0, 0, hook);
  winograd_elementwise_accumulate(m, u1, v1, dp, map, 0, 1, 0, hook);
  for (int i = 0; i < 16; ++i) CHECK(m[i] == u0[i] * v0[i] + u1[i] * v1[i]);

  // identity-pattern U masks V
  std::array<int64_t, 16> uid{}, macc{};
  for (int i = 0; i < 16; i += 5) uid[i] = 1;
  winograd_elementwise_accumulate(macc, uid, v0, dp, map, 0, 0, 0, hook);
  for (int i = 0; i < 16; ++i) CHECK(macc[i] == (uid[i] ? v0[i] : 0));
}

TEST_CASE("direct conv against the naive scalar oracle") {
  FxpFormat fmt = FxpFormat::int8_default();
  DatapathSpec dp = DatapathSpec::for_format(fmt);
  IdentityHook hook;
  RngStream rng(21);

  SUBCASE("all-zero weights give zero output") {
    ConvSpec spec{2, 3, 3, 1, 1, 6, 6};
    FxpTensor in = random_tensor({2, 6, 6}, fmt, rng, 127);
    FxpTensor w({3, 2, 3, 3}, fmt);
    FxpTensor out = direct_conv(in, w, spec, dp, 0, hook);
    for (int32_t v : out.data) CHECK(v == 0);
  }
  SUBCASE("center delta kernel reproduces the input") {
    FxpFormat f16 = FxpFormat::int16_default();
    DatapathSpec dp16 = DatapathSpec::for_format(f16);
    ConvSpec spec{1, 1, 3, 1, 1, 5, 7};
    FxpTensor in = random_tensor({1, 5, 7}, f16, rng, 1000);
    FxpTensor w({1, 1, 3, 3}, f16);
    w.data[4] = static_cast<int32_t>(f16.one_raw());
    FxpTensor out = direct_conv(in, w, spec, dp16, 0, hook);
    CHECK(out.data == in.data);
  }
  SUBCASE("random layers match bit-exactly") {
    for (int trial = 0; trial < 50; ++trial) {
      int C = 1 + static_cast<int>(rng.next_u64() % 4);
      int F = 1 + static_cast<int>(rng.next_u64() % 4);
      int H = 4 + static_cast<int>(rng.next_u64() % 6);
      int W = 4 + static_cast<int>(rng.next_u64() % 6);
      int K = 1 + 2 * static_cast<int>(rng.next_u64() % 2);  // 1 or 3
      int s = 1 + static_cast<int>(rng.next_u64() % 2);
      int p = static_cast<int>(rng.next_u64() % 2);
      ConvSpec spec{C, F, K, s, p, H, W};
      if (!spec.valid()) continue;
      FxpTensor in = random_tensor({C, H, W}, fmt, rng, 127);
      FxpTensor w = random_tensor({F, C, K, K}, fmt, rng, 127);
      FxpTensor out = direct_conv(in, w, spec, dp, 0, hook);
      auto expect = oracles::naive_conv(in.data, C, H, W, w.data, F, K, s, p, fmt.frac_bits,
                                        fmt.word_bits);
      REQUIRE(out.data == expect);
    }
  }
  SUBCASE("shape mismatch raises") {
    ConvSpec spec{2, 3, 3, 1, 1, 6, 6};
    FxpTensor in = random_tensor({1, 6, 6}, fmt, rng, 10);
    FxpTensor w({3, 2, 3, 3}, fmt);
    CHECK_THROWS_AS(direct_conv(in, w, spec, dp, 0, hook), Error);
  }
}

TEST_CASE("winograd conv equals direct conv bit-exactly under the identity hook") {
  IdentityHook hook;
  RngStream rng(31);
  int done = 0;
  while (done < 100) {
    bool wide = rng.next_u64() % 2;
    FxpFormat fmt = wide ? FxpFormat::int16_default() : FxpFormat::int8_default();
    DatapathSpec dp = DatapathSpec::for_format(fmt);
    int C = 1 + static_cast<int>(rng.next_u64() % 8);
    int F = 1 + static_cast<int>(rng.next_u64() % 8);
    int H = 3 + static_cast<int>(rng.next_u64() % 10);
    int W = 3 + static_cast<int>(rng.next_u64() % 10);
    int p = static_cast<int>(rng.next_u64() % 3);
    ConvSpec spec{C, F, 3, 1, p, H, W};
    if (!spec.valid()) continue;
    // int16 values kept within accumulator headroom (9*C*bound^2*4 < 2^31)
    int64_t bound = wide ? 900 : 127;
    FxpTensor in = random_tensor({C, H, W}, fmt, rng, bound);
    FxpTensor w = random_tensor({F, C, 3, 3}, fmt, rng, bound);
    FxpTensor d = direct_conv(in, w, spec, dp, 0, hook);
    FxpTensor g = winograd_conv(in, w, spec, dp, 0, hook);
    REQUIRE(d.shape == g.shape);
    REQUIRE(d.data == g.data);
    ++done;
  }
}

TEST_CASE("winograd single tile matches the rational oracle") {
  FxpFormat fmt = FxpFormat::int8_default();
  DatapathSpec dp = DatapathSpec::for_format(fmt);
  IdentityHook hook;
  RngStream rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    ConvSpec spec{1, 1, 3, 1, 0, 4, 4};
    FxpTensor in = random_tensor({1, 4, 4}, fmt, rng, 127);
    FxpTensor w = random_tensor({1, 1, 3, 3}, fmt, rng, 127);
    FxpTensor out = winograd_conv(in, w, spec, dp, 0, hook);
    int64_t d[16], g[9];
    for (int i = 0; i < 16; ++i) d[i] = in.data[i];
    for (int i = 0; i < 9; ++i) g[i] = w.data[i];
    auto y4 = RationalWinograd::conv4(d, g);
    // y4 carries 2*frac + 2 fraction bits; requantize back to frac
    int shift = fmt.frac_bits + 2;
    for (int i = 0; i < 4; ++i) {
      long long r = (y4[i] + (1LL << (shift - 1))) >> shift;
      if (r > fmt.raw_max()) r = fmt.raw_max();
      if (r < fmt.raw_min()) r = fmt.raw_min();
      REQUIRE(out.data[i] == r);
    }
  }

  FxpTensor zin({1, 4, 4}, fmt);
  FxpTensor zw = random_tensor({1, 1, 3, 3}, fmt, rng, 127);
  ConvSpec spec{1, 1, 3, 1, 0, 4, 4};
  FxpTensor zout = winograd_conv(zin, zw, spec, dp, 0, hook);
  for (int32_t v : zout.data) CHECK(v == 0);
}

TEST_CASE("winograd rejects ineligible specs") {
  FxpFormat fmt = FxpFormat::int8_default();
  DatapathSpec dp = DatapathSpec::for_format(fmt);
  IdentityHook hook;
  FxpTensor in({1, 6, 6}, fmt);
  SUBCASE("kernel") {
    ConvSpec spec{1, 1, 5, 1, 0, 6, 6};
    FxpTensor w({1, 1, 5, 5}, fmt);
    CHECK_THROWS_WITH_AS(winograd_conv(in, w, spec, dp, 0, hook),
                         doctest::Contains("3x3"), Error);
  }
  SUBCASE("stride") {
    ConvSpec spec{1, 1, 3, 2, 0, 6, 6};
    FxpTensor w({1, 1, 3, 3}, fmt);
    CHECK_THROWS_AS(winograd_conv(in, w, spec, dp, 0, hook), Error);
  }
}

TEST_CASE("count_ops closed forms") {
  // 1 filter, 1 channel, 3x3 kernel, 4x4 output
  ConvSpec spec{1, 1, 3, 1, 1, 4, 4};
  REQUIRE(spec.out_h() == 4);
  OpCounts direct = count_conv_ops(spec, ConvEngine::DIRECT);
  CHECK(direct.mul == 144);  // 9 taps x 16 outputs
  CHECK(direct.add == 144);
  OpCounts wg = count_conv_ops(spec, ConvEngine::WINOGRAD);
  CHECK(wg.wg_mul_elementwise == 64);  // 4 tiles x 16
  CHECK(wg.wg_mul_filter == 14);
  CHECK(wg.wg_add_input == 128);
  CHECK(wg.wg_add_accumulate == 64);
  CHECK(wg.wg_add_output == 96);
  CHECK(wg.wg_add_filter == 28);
  CHECK(wg.mul == wg.wg_mul_filter + wg.wg_mul_elementwise);
  // element-wise stage multiplication reduction is exactly 16/36
  CHECK(36 * wg.wg_mul_elementwise == 16 * direct.mul);
}

TEST_CASE("counts match instrumented runs for random specs") {
  RngStream rng(51);
  FxpFormat fmt = FxpFormat::int8_default();
  DatapathSpec dp = DatapathSpec::for_format(fmt);
  for (int trial = 0; trial < 20; ++trial) {
    int C = 1 + static_cast<int>(rng.next_u64() % 5);
    int F = 1 + static_cast<int>(rng.next_u64() % 5);
    int H = 3 + static_cast<int>(rng.next_u64() % 8);
    int W = 3 + static_cast<int>(rng.next_u64() % 8);
    int p = static_cast<int>(rng.next_u64() % 2);
    ConvSpec spec{C, F, 3, 1, p, H, W};
    if (!spec.valid()) continue;
    FxpTensor in = random_tensor({C, H, W}, fmt, rng, 127);
    FxpTensor w = random_tensor({F, C, 3, 3}, fmt, rng, 127);

    CountingHook cd;
    direct_conv(in, w, spec, dp, 0, cd);
    OpCounts nd = count_conv_ops(spec, ConvEngine::DIRECT);
    REQUIRE(cd.mul_count == nd.mul);
    REQUIRE(cd.add_count == nd.add);

    CountingHook cw;
    winograd_conv(in, w, spec, dp, 0, cw);
    OpCounts nw = count_conv_ops(spec, ConvEngine::WINOGRAD);
    REQUIRE(cw.mul_count == nw.mul);
    REQUIRE(cw.add_count == nw.add);
    REQUIRE(cw.mul_by_stage[static_cast<int>(WgStage::FILTER)] == nw.wg_mul_filter);
    REQUIRE(cw.mul_by_stage[static_cast<int>(WgStage::ELEMENTWISE)] == nw.wg_mul_elementwise);
    REQUIRE(cw.add_by_stage[static_cast<int>(WgStage::FILTER)] == nw.wg_add_filter);
    REQUIRE(cw.add_by_stage[static_cast<int>(WgStage::INPUT)] == nw.wg_add_input);
    REQUIRE(cw.add_by_stage[static_cast<int>(WgStage::ELEMENTWISE)] == nw.wg_add_accumulate);
    REQUIRE(cw.add_by_stage[static_cast<int>(WgStage::OUTPUT)] == nw.wg_add_output);

    // single-channel layers: winograd trades mults for a strictly larger add count
    if (C == 1) {
      CHECK(nw.add > nd.add);
      CHECK(nw.mul < nd.mul);
    }
  }
}

TEST_CASE("fault sites are deterministic across repeated runs") {
  FxpFormat fmt = FxpFormat::int16_default();
  DatapathSpec dp = DatapathSpec::for_format(fmt);
  RngStream rng(61);
  ConvSpec spec{4, 4, 3, 1, 1, 8, 8};
  FxpTensor in = random_tensor({4, 8, 8}, fmt, rng, 900);
  FxpTensor w = random_tensor({4, 4, 3, 3}, fmt, rng, 900);
  FaultConfig cfg;
  cfg.mode = FaultMode::OP_LEVEL;
  cfg.ber = 1e-4;
  cfg.seed = 77;
  for (auto engine : {ConvEngine::DIRECT, ConvEngine::WINOGRAD}) {
    auto run = [&](uint64_t trial) {
      FaultConfig c = cfg;
      c.trial_id = trial;
      FaultHook hook(c, dp);
      return engine == ConvEngine::DIRECT ? direct_conv(in, w, spec, dp, 0, hook)
                                          : winograd_conv(in, w, spec, dp, 0, hook);
    };
    CHECK(run(5).data == run(5).data);
    CHECK(run(5).data != run(6).data);
  }
}
