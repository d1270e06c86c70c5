#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "winofi/error.hpp"
#include "winofi/fxp.hpp"
#include "winofi/hook.hpp"
#include "winofi/site.hpp"

namespace winofi {

enum class ConvEngine : uint8_t { DIRECT = 0, WINOGRAD = 1 };
const char* to_string(ConvEngine e);

struct ConvSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 3;
  int stride = 1;
  int padding = 0;
  int in_h = 0;
  int in_w = 0;

  int out_h() const { return (in_h + 2 * padding - kernel) / stride + 1; }
  int out_w() const { return (in_w + 2 * padding - kernel) / stride + 1; }
  bool winograd_eligible() const { return kernel == 3 && stride == 1; }
  bool valid() const {
    return in_channels > 0 && out_channels > 0 && kernel > 0 && stride > 0 &&
           padding >= 0 && out_h() > 0 && out_w() > 0;
  }
};

struct OpCounts {
  uint64_t mul = 0;
  uint64_t add = 0;
  // winograd stage breakdown (zero for DIRECT)
  uint64_t wg_mul_filter = 0;
  uint64_t wg_mul_elementwise = 0;
  uint64_t wg_add_filter = 0;
  uint64_t wg_add_input = 0;
  uint64_t wg_add_accumulate = 0;
  uint64_t wg_add_output = 0;

  void add_counts(const OpCounts& o) {
    mul += o.mul;
    add += o.add;
    wg_mul_filter += o.wg_mul_filter;
    wg_mul_elementwise += o.wg_mul_elementwise;
    wg_add_filter += o.wg_add_filter;
    wg_add_input += o.wg_add_input;
    wg_add_accumulate += o.wg_add_accumulate;
    wg_add_output += o.wg_add_output;
  }
};

// Exact number of MUL/ADD sites each engine emits for a layer; must equal
// observed hook invocation counts.
OpCounts count_conv_ops(const ConvSpec& spec, ConvEngine engine);
OpCounts count_fc_ops(int in_features, int out_features);

// Contiguous site-index ranges per stage for one conv layer, in index
// order. Lets scope-aware code (protection accounting) reason about which
// sites a stage mask makes fault-prone.
struct SiteRange {
  WgStage stage;
  uint64_t begin;
  uint64_t end;
};
std::vector<SiteRange> conv_site_ranges(const ConvSpec& spec, ConvEngine engine, OpKind kind);

// ---------------------------------------------------------------------------
// Site index layout. Indices are pure functions of coordinates so that fault
// sites are identical across runs and thread schedules.
//
// DIRECT (and FC): mul and add share the index
//   (((f*Ho + y)*Wo + x)*C + c)*K^2 + tap        (FC: o*In + i)
// one ADD per accumulate step, acc starting from 0 (MAC style), so
// n_add == n_mul.
//
// WINOGRAD F(2x2,3x3), per layer with F filters, C channels, T tiles:
//   MUL space: [0, 14*F*C)                filter transform (x 1/2 taps)
//              [14*F*C, +16*F*C*T)        element-wise products
//   ADD space: [0, 28*F*C)                filter transform
//              [28*F*C, +32*C*T)          input transform (shared across F)
//              [.., +16*F*C*T)            channel accumulation
//              [.., +24*F*T)              output transform
// U_kc is computed once per (filter, channel) and shared across tiles;
// V_cb once per (channel, tile) and shared across filters.
// ---------------------------------------------------------------------------
struct WgSiteMap {
  uint64_t F = 0, C = 0, T = 0;

  uint64_t filter_mul(uint64_t k, uint64_t c, uint64_t m) const {
    return (k * C + c) * 14 + m;
  }
  uint64_t elem_mul(uint64_t k, uint64_t c, uint64_t b, uint64_t pos) const {
    return 14 * F * C + ((k * C + c) * T + b) * 16 + pos;
  }
  uint64_t filter_add(uint64_t k, uint64_t c, uint64_t a) const {
    return (k * C + c) * 28 + a;
  }
  uint64_t input_add(uint64_t c, uint64_t b, uint64_t a) const {
    return 28 * F * C + (c * T + b) * 32 + a;
  }
  uint64_t accum_add(uint64_t k, uint64_t c, uint64_t b, uint64_t pos) const {
    return 28 * F * C + 32 * C * T + ((k * C + c) * T + b) * 16 + pos;
  }
  uint64_t output_add(uint64_t k, uint64_t b, uint64_t a) const {
    return 28 * F * C + 32 * C * T + 16 * F * C * T + (k * T + b) * 24 + a;
  }
};

// Winograd F(2x2,3x3) transform constants (standard construction):
//   G  = [1 0 0; 1/2 1/2 1/2; 1/2 -1/2 1/2; 0 0 1]         (4x3)
//   B^T= [1 0 -1 0; 0 1 1 0; 0 -1 1 0; 0 1 0 -1]           (4x4)
//   A^T= [1 1 1 0; 0 1 -1 -1]                              (2x4)
// B and A are integer-only; G's halves are exact after lifting the filter
// by g_frac_extra = 2 fraction bits, so the whole pipeline is exact and the
// output requantize shift removes 2*frac_bits + 2.
inline constexpr int kWgFracExtra = 2;

// U = G g G^T at frac_bits + 2, computed through hooked ops. Multiplications
// by +-1/2 are MUL sites; everything else is ADD work. g is the 3x3 filter
// slice in raw words, row-major.
template <typename Hook>
std::array<int64_t, 16> winograd_filter_transform(const int32_t g[9], const DatapathSpec& dp,
                                                  const WgSiteMap& map, uint64_t k, uint64_t c,
                                                  Hook& hook) {
  auto madd = [&](uint64_t a, int64_t x, int64_t y) {
    return hook.add(map.filter_add(k, c, a), WgStage::FILTER, fxp_add(x, y, dp));
  };
  auto half = [&](uint64_t m, int64_t x) {
    // exact: operand is always an even multiple after the frac lift
    return hook.mul(map.filter_mul(k, c, m), WgStage::FILTER, x >> 1);
  };
  // lift to frac_bits + 2 (representation change, not arithmetic)
  int64_t gl[9];
  for (int i = 0; i < 9; ++i) gl[i] = static_cast<int64_t>(g[i]) << kWgFracExtra;

  int64_t t[4][3];
  for (uint64_t j = 0; j < 3; ++j) {
    int64_t x0 = gl[0 * 3 + j], x1 = gl[1 * 3 + j], x2 = gl[2 * 3 + j];
    t[0][j] = x0;
    int64_t s1 = madd(j * 4 + 0, x0, x1);
    int64_t s2 = madd(j * 4 + 1, s1, x2);
    t[1][j] = half(j * 2 + 0, s2);
    int64_t d1 = madd(j * 4 + 2, x0, -x1);
    int64_t d2 = madd(j * 4 + 3, d1, x2);
    t[2][j] = half(j * 2 + 1, d2);
    t[3][j] = x2;
  }
  std::array<int64_t, 16> u{};
  for (uint64_t r = 0; r < 4; ++r) {
    int64_t y0 = t[r][0], y1 = t[r][1], y2 = t[r][2];
    u[r * 4 + 0] = y0;
    int64_t s1 = madd(12 + r * 4 + 0, y0, y1);
    int64_t s2 = madd(12 + r * 4 + 1, s1, y2);
    u[r * 4 + 1] = half(6 + r * 2 + 0, s2);
    int64_t d1 = madd(12 + r * 4 + 2, y0, -y1);
    int64_t d2 = madd(12 + r * 4 + 3, d1, y2);
    u[r * 4 + 2] = half(6 + r * 2 + 1, d2);
    u[r * 4 + 3] = y2;
  }
  return u;
}

// V = B^T d B at the input's frac precision; integer-only, ADD sites only.
// d is the 4x4 input tile, row-major.
template <typename Hook>
std::array<int64_t, 16> winograd_input_transform(const int64_t d[16], const DatapathSpec& dp,
                                                 const WgSiteMap& map, uint64_t c, uint64_t b,
                                                 Hook& hook) {
  auto madd = [&](uint64_t a, int64_t x, int64_t y) {
    return hook.add(map.input_add(c, b, a), WgStage::INPUT, fxp_add(x, y, dp));
  };
  int64_t t[4][4];
  for (uint64_t j = 0; j < 4; ++j) {
    int64_t x0 = d[0 * 4 + j], x1 = d[1 * 4 + j], x2 = d[2 * 4 + j], x3 = d[3 * 4 + j];
    t[0][j] = madd(j * 4 + 0, x0, -x2);
    t[1][j] = madd(j * 4 + 1, x1, x2);
    t[2][j] = madd(j * 4 + 2, x2, -x1);
    t[3][j] = madd(j * 4 + 3, x1, -x3);
  }
  std::array<int64_t, 16> v{};
  for (uint64_t r = 0; r < 4; ++r) {
    int64_t y0 = t[r][0], y1 = t[r][1], y2 = t[r][2], y3 = t[r][3];
    v[r * 4 + 0] = madd(16 + r * 4 + 0, y0, -y2);
    v[r * 4 + 1] = madd(16 + r * 4 + 1, y1, y2);
    v[r * 4 + 2] = madd(16 + r * 4 + 2, y2, -y1);
    v[r * 4 + 3] = madd(16 + r * 4 + 3, y1, -y3);
  }
  return v;
}

// M += U (.) V for one channel: 16 MUL sites per (k, c, b), accumulation
// ADDs keyed by the same coordinates. Callers iterate channels ascending.
template <typename Hook>
void winograd_elementwise_accumulate(std::array<int64_t, 16>& m,
                                     const std::array<int64_t, 16>& u,
                                     const std::array<int64_t, 16>& v,
                                     const DatapathSpec& dp, const WgSiteMap& map,
                                     uint64_t k, uint64_t c, uint64_t b, Hook& hook) {
  for (uint64_t pos = 0; pos < 16; ++pos) {
    int64_t p = hook.mul(map.elem_mul(k, c, b, pos), WgStage::ELEMENTWISE,
                         fxp_mul(u[pos], v[pos], dp));
    m[pos] = hook.add(map.accum_add(k, c, b, pos), WgStage::ELEMENTWISE,
                      fxp_add(m[pos], p, dp));
  }
}

// Y = A^T M A; integer-only, ADD sites only. Returns the 2x2 tile in the
// accumulated frac precision (2*frac_bits + 2); requantize follows.
template <typename Hook>
std::array<int64_t, 4> winograd_output_transform(const std::array<int64_t, 16>& m,
                                                 const DatapathSpec& dp, const WgSiteMap& map,
                                                 uint64_t k, uint64_t b, Hook& hook) {
  auto madd = [&](uint64_t a, int64_t x, int64_t y) {
    return hook.add(map.output_add(k, b, a), WgStage::OUTPUT, fxp_add(x, y, dp));
  };
  int64_t t[2][4];
  for (uint64_t j = 0; j < 4; ++j) {
    int64_t x0 = m[0 * 4 + j], x1 = m[1 * 4 + j], x2 = m[2 * 4 + j], x3 = m[3 * 4 + j];
    int64_t s1 = madd(j * 4 + 0, x0, x1);
    t[0][j] = madd(j * 4 + 1, s1, x2);
    int64_t d1 = madd(j * 4 + 2, x1, -x2);
    t[1][j] = madd(j * 4 + 3, d1, -x3);
  }
  std::array<int64_t, 4> y{};
  for (uint64_t r = 0; r < 2; ++r) {
    int64_t y0 = t[r][0], y1 = t[r][1], y2 = t[r][2], y3 = t[r][3];
    int64_t s1 = madd(16 + r * 4 + 0, y0, y1);
    y[r * 2 + 0] = madd(16 + r * 4 + 1, s1, y2);
    int64_t d1 = madd(16 + r * 4 + 2, y1, -y2);
    y[r * 2 + 1] = madd(16 + r * 4 + 3, d1, -y3);
  }
  return y;
}

// Direct (standard) convolution. Accumulation order is fixed: channel-major,
// then row-major taps, so every fault site has one coordinate-defined home.
template <typename Hook>
FxpTensor direct_conv(const FxpTensor& input, const FxpTensor& weights, const ConvSpec& spec,
                      const DatapathSpec& dp, uint32_t layer_id, Hook& hook,
                      uint64_t* saturations = nullptr) {
  if (input.shape != std::vector<int>{spec.in_channels, spec.in_h, spec.in_w} ||
      weights.shape != std::vector<int>{spec.out_channels, spec.in_channels, spec.kernel, spec.kernel})
    raise(ErrorCode::SHAPE_MISMATCH, "direct_conv: tensor shapes do not match spec");
  const int C = spec.in_channels, F = spec.out_channels, K = spec.kernel;
  const int H = spec.in_h, W = spec.in_w, Ho = spec.out_h(), Wo = spec.out_w();
  const int frac = input.format.frac_bits;
  hook.set_layer(layer_id, false);
  FxpTensor out({F, Ho, Wo}, input.format);
  for (int f = 0; f < F; ++f) {
    for (int y = 0; y < Ho; ++y) {
      for (int x = 0; x < Wo; ++x) {
        uint64_t base = ((static_cast<uint64_t>(f) * Ho + y) * Wo + x) *
                        static_cast<uint64_t>(C) * K * K;
        int64_t acc = 0;
        for (int c = 0; c < C; ++c) {
          for (int t = 0; t < K * K; ++t) {
            int ki = t / K, kj = t % K;
            int iy = y * spec.stride - spec.padding + ki;
            int ix = x * spec.stride - spec.padding + kj;
            int64_t a = 0;
            if (iy >= 0 && iy < H && ix >= 0 && ix < W)
              a = input.data[(static_cast<size_t>(c) * H + iy) * W + ix];
            int64_t w = weights.data[((static_cast<size_t>(f) * C + c) * K + ki) * K + kj];
            uint64_t site = base + static_cast<uint64_t>(c) * K * K + t;
            int64_t p = hook.mul(site, WgStage::MAIN, fxp_mul(a, w, dp));
            acc = hook.add(site, WgStage::MAIN, fxp_add(acc, p, dp));
          }
        }
        out.data[(static_cast<size_t>(f) * Ho + y) * Wo + x] =
            requantize(acc, 2 * frac, input.format, saturations);
      }
    }
  }
  return out;
}

// Winograd F(2x2,3x3) convolution. Bit-exactly equals direct_conv under the
// identity hook. Requires kernel 3 and stride 1; edge tiles beyond the
// padded map are zero-extended and partial outputs discarded.
template <typename Hook>
FxpTensor winograd_conv(const FxpTensor& input, const FxpTensor& weights, const ConvSpec& spec,
                        const DatapathSpec& dp, uint32_t layer_id, Hook& hook,
                        uint64_t* saturations = nullptr) {
  if (!spec.winograd_eligible())
    raise(ErrorCode::INELIGIBLE_SPEC, "winograd_conv requires a 3x3 kernel with stride 1");
  if (input.shape != std::vector<int>{spec.in_channels, spec.in_h, spec.in_w} ||
      weights.shape != std::vector<int>{spec.out_channels, spec.in_channels, 3, 3})
    raise(ErrorCode::SHAPE_MISMATCH, "winograd_conv: tensor shapes do not match spec");
  const int C = spec.in_channels, F = spec.out_channels;
  const int H = spec.in_h, W = spec.in_w, Ho = spec.out_h(), Wo = spec.out_w();
  const int frac = input.format.frac_bits;
  const int tiles_y = (Ho + 1) / 2, tiles_x = (Wo + 1) / 2;
  const WgSiteMap map{static_cast<uint64_t>(F), static_cast<uint64_t>(C),
                      static_cast<uint64_t>(tiles_y) * tiles_x};
  hook.set_layer(layer_id, false);

  // Filter transforms, shared across tiles.
  std::vector<std::array<int64_t, 16>> u(static_cast<size_t>(F) * C);
  for (int k = 0; k < F; ++k)
    for (int c = 0; c < C; ++c)
      u[static_cast<size_t>(k) * C + c] = winograd_filter_transform(
          &weights.data[(static_cast<size_t>(k) * C + c) * 9], dp, map, k, c, hook);

  FxpTensor out({F, Ho, Wo}, input.format);
  std::vector<std::array<int64_t, 16>> v(static_cast<size_t>(C));
  int64_t d[16];
  for (int ty = 0; ty < tiles_y; ++ty) {
    for (int tx = 0; tx < tiles_x; ++tx) {
      uint64_t b = static_cast<uint64_t>(ty) * tiles_x + tx;
      // Input transforms for this tile, shared across filters.
      for (int c = 0; c < C; ++c) {
        for (int i = 0; i < 4; ++i) {
          for (int j = 0; j < 4; ++j) {
            int iy = 2 * ty - spec.padding + i;
            int ix = 2 * tx - spec.padding + j;
            d[i * 4 + j] = (iy >= 0 && iy < H && ix >= 0 && ix < W)
                               ? input.data[(static_cast<size_t>(c) * H + iy) * W + ix]
                               : 0;
          }
        }
        v[c] = winograd_input_transform(d, dp, map, c, b, hook);
      }
      for (int k = 0; k < F; ++k) {
        std::array<int64_t, 16> m{};
        for (int c = 0; c < C; ++c)
          winograd_elementwise_accumulate(m, u[static_cast<size_t>(k) * C + c], v[c], dp, map,
                                          k, c, b, hook);
        std::array<int64_t, 4> y = winograd_output_transform(m, dp, map, k, b, hook);
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            int oy = 2 * ty + dy, ox = 2 * tx + dx;
            if (oy < Ho && ox < Wo)
              out.data[(static_cast<size_t>(k) * Ho + oy) * Wo + ox] =
                  requantize(y[dy * 2 + dx], 2 * frac + kWgFracExtra, input.format, saturations);
          }
        }
      }
    }
  }
  return out;
}

// Fully connected layer as hooked MACs; weights are [out, in].
template <typename Hook>
FxpTensor fc_layer(const FxpTensor& input, const FxpTensor& weights, uint32_t layer_id,
                   const DatapathSpec& dp, Hook& hook, uint64_t* saturations = nullptr) {
  const int in_n = static_cast<int>(input.numel());
  if (weights.shape.size() != 2 || weights.shape[1] != in_n)
    raise(ErrorCode::SHAPE_MISMATCH, "fc_layer: weight shape does not match input");
  const int out_n = weights.shape[0];
  const int frac = input.format.frac_bits;
  hook.set_layer(layer_id, true);
  FxpTensor out({out_n}, input.format);
  for (int o = 0; o < out_n; ++o) {
    int64_t acc = 0;
    uint64_t base = static_cast<uint64_t>(o) * in_n;
    for (int i = 0; i < in_n; ++i) {
      int64_t p = hook.mul(base + i, WgStage::MAIN,
                           fxp_mul(input.data[i], weights.data[static_cast<size_t>(o) * in_n + i], dp));
      acc = hook.add(base + i, WgStage::MAIN, fxp_add(acc, p, dp));
    }
    out.data[o] = requantize(acc, 2 * frac, input.format, saturations);
  }
  return out;
}

}  // namespace winofi
