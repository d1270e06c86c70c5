#include "winofi/conv.hpp"

namespace winofi {

OpCounts count_conv_ops(const ConvSpec& spec, ConvEngine engine) {
  OpCounts n;
  const uint64_t C = spec.in_channels, F = spec.out_channels;
  const uint64_t Ho = spec.out_h(), Wo = spec.out_w();
  if (engine == ConvEngine::DIRECT) {
    const uint64_t K2 = static_cast<uint64_t>(spec.kernel) * spec.kernel;
    n.mul = F * Ho * Wo * C * K2;
    n.add = n.mul;
    return n;
  }
  if (!spec.winograd_eligible())
    raise(ErrorCode::INELIGIBLE_SPEC, "count_conv_ops: winograd needs 3x3 stride 1");
  const uint64_t T = ((Ho + 1) / 2) * ((Wo + 1) / 2);
  n.wg_mul_filter = 14 * F * C;
  n.wg_mul_elementwise = 16 * F * C * T;
  n.wg_add_filter = 28 * F * C;
  n.wg_add_input = 32 * C * T;
  n.wg_add_accumulate = 16 * F * C * T;
  n.wg_add_output = 24 * F * T;
  n.mul = n.wg_mul_filter + n.wg_mul_elementwise;
  n.add = n.wg_add_filter + n.wg_add_input + n.wg_add_accumulate + n.wg_add_output;
  return n;
}

OpCounts count_fc_ops(int in_features, int out_features) {
  OpCounts n;
  n.mul = static_cast<uint64_t>(in_features) * out_features;
  n.add = n.mul;
  return n;
}

std::vector<SiteRange> conv_site_ranges(const ConvSpec& spec, ConvEngine engine, OpKind kind) {
  OpCounts n = count_conv_ops(spec, engine);
  if (engine == ConvEngine::DIRECT)
    return {{WgStage::MAIN, 0, kind == OpKind::MUL ? n.mul : n.add}};
  if (kind == OpKind::MUL)
    return {{WgStage::FILTER, 0, n.wg_mul_filter},
            {WgStage::ELEMENTWISE, n.wg_mul_filter, n.wg_mul_filter + n.wg_mul_elementwise}};
  uint64_t a = n.wg_add_filter;
  uint64_t b = a + n.wg_add_input;
  uint64_t c = b + n.wg_add_accumulate;
  return {{WgStage::FILTER, 0, a},
          {WgStage::INPUT, a, b},
          {WgStage::ELEMENTWISE, b, c},
          {WgStage::OUTPUT, c, c + n.wg_add_output}};
}

const char* to_string(ConvEngine e) {
  return e == ConvEngine::DIRECT ? "direct" : "winograd";
}

}  // namespace winofi
