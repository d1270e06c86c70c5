#include "winofi/fault.hpp"

namespace winofi {

bool ProtectionSet::empty() const {
  for (const auto& [layer, f] : layer_fractions)
    if (f.mul > 0.0 || f.add > 0.0) return false;
  return true;
}

double ProtectionSet::fraction(uint32_t layer_id, OpKind kind) const {
  auto it = layer_fractions.find(layer_id);
  if (it == layer_fractions.end()) return 0.0;
  return kind == OpKind::MUL ? it->second.mul : it->second.add;
}

void ProtectionSet::set_fraction(uint32_t layer_id, OpKind kind, double fraction) {
  auto& f = layer_fractions[layer_id];
  (kind == OpKind::MUL ? f.mul : f.add) = fraction;
}

uint64_t ProtectionSet::fraction_threshold(double fraction) {
  if (fraction <= 0.0) return 0;
  if (fraction >= 1.0) return ~uint64_t{0};
  return static_cast<uint64_t>(fraction * 0x1.0p64);
}

uint64_t ProtectionSet::member_hash(uint64_t selection_seed, uint32_t layer_id,
                                    OpKind kind, uint64_t site_index) {
  uint64_t h = mix64(selection_seed, (uint64_t{layer_id} << 8) | static_cast<uint64_t>(kind));
  return mix64(h, site_index);
}

bool ProtectionSet::is_protected(uint32_t layer_id, OpKind kind, uint64_t site_index) const {
  double f = fraction(layer_id, kind);
  if (f <= 0.0) return false;
  if (f >= 1.0) return true;
  return member_hash(selection_seed, layer_id, kind, site_index) < fraction_threshold(f);
}

FlipSampler::FlipSampler(double ber, int width) : ber_(ber), width_(width) {
  if (ber <= 0.0 || width <= 0) {
    never_ = true;
    return;
  }
  never_ = false;
  if (ber >= 1.0) {
    flip_all_ = true;
    return;
  }
  double ln_1m = std::log1p(-ber);
  inv_ln_1m_ber_ = 1.0 / ln_1m;
  // P(no flip) = (1-ber)^width; the first-flip position >= width exactly
  // when the uniform draw falls below this cutoff.
  double p_noflip = std::exp(static_cast<double>(width) * ln_1m);
  double cut = p_noflip * 0x1.0p64;
  noflip_cutoff_ = cut >= 0x1.0p64 ? ~uint64_t{0} : static_cast<uint64_t>(cut);
}

uint64_t FlipSampler::sample_mask(RngStream& rng) const {
  if (never_) return 0;
  if (flip_all_) return width_ >= 64 ? ~uint64_t{0} : ((uint64_t{1} << width_) - 1);
  uint64_t draw = rng.next_u64();
  if (draw < noflip_cutoff_) return 0;
  // First flip position from the draw we already made, then geometric gaps.
  double u = static_cast<double>((draw >> 11) + 1) * 0x1.0p-53;
  int64_t pos = static_cast<int64_t>(std::log(u) * inv_ln_1m_ber_);
  uint64_t mask = 0;
  while (pos < width_) {
    mask |= uint64_t{1} << pos;
    pos += 1 + static_cast<int64_t>(std::log(rng.next_unit()) * inv_ln_1m_ber_);
  }
  return mask;
}

namespace detail {
int64_t apply_mask(int64_t value, uint64_t mask, int width) {
  if (mask == 0) return value;
  int64_t flipped = static_cast<int64_t>(static_cast<uint64_t>(value) ^ mask);
  // Word semantics when the value fits the word; wider values (possible for
  // winograd transform-domain products on a narrow mul bus) keep high bits.
  if (fits_bits(value, width)) return wrap_to_bits(flipped, width);
  return flipped;
}
}  // namespace detail

int64_t flip_bits(int64_t value, int width, double ber, RngStream& rng,
                  InjectionStats* stats) {
  FlipSampler sampler(ber, width);
  uint64_t mask = sampler.sample_mask(rng);
  if (mask && stats) {
    stats->flips += std::popcount(mask);
    ++stats->flipped_ops;
  }
  return detail::apply_mask(value, mask, width);
}

int64_t flip_bits_naive(int64_t value, int width, double ber, RngStream& rng,
                        InjectionStats* stats) {
  uint64_t mask = 0;
  for (int b = 0; b < width; ++b)
    if (rng.next_unit() <= ber) mask |= uint64_t{1} << b;
  if (mask && stats) {
    stats->flips += std::popcount(mask);
    ++stats->flipped_ops;
  }
  return detail::apply_mask(value, mask, width);
}

int64_t inject_op(const OpSite& site, int64_t value, int width,
                  const FaultConfig& cfg, InjectionStats* stats) {
  if (cfg.mode != FaultMode::OP_LEVEL || cfg.ber <= 0.0) return value;
  if (!cfg.layer_in_scope(site.layer_id) || !cfg.kind_in_scope(site.kind)) return value;
  if (cfg.protection.is_protected(site.layer_id, site.kind, site.index)) {
    if (stats) ++stats->protected_ops;
    FlipSampler sampler(cfg.ber, width);
    uint64_t masks[3];
    for (uint32_t r = 0; r < 3; ++r) {
      RngStream rng = RngStream::from_key(cfg.seed, cfg.trial_id, site.layer_id,
                                          static_cast<uint32_t>(site.kind), site.index, r);
      masks[r] = sampler.sample_mask(rng);
    }
    // Majority vote of the three corrupted replicas; a bit survives
    // corrupted only when >= 2 replicas flipped it.
    uint64_t residual = tmr_vote(masks[0], masks[1], masks[2]);
    if (residual && stats) {
      stats->flips += std::popcount(residual);
      ++stats->flipped_ops;
    }
    return detail::apply_mask(value, residual, width);
  }
  RngStream rng = RngStream::from_key(cfg.seed, cfg.trial_id, site.layer_id,
                                      static_cast<uint32_t>(site.kind), site.index, 0);
  return flip_bits(value, width, cfg.ber, rng, stats);
}

void inject_neurons(FxpTensor& t, uint32_t layer_id, const FaultConfig& cfg,
                    InjectionStats* stats) {
  if (cfg.mode != FaultMode::NEURON_LEVEL || cfg.ber <= 0.0) return;
  if (!cfg.layer_in_scope(layer_id)) return;
  FlipSampler sampler(cfg.ber, t.format.word_bits);
  for (size_t i = 0; i < t.data.size(); ++i) {
    if (stats) ++stats->neuron_words;
    RngStream rng = RngStream::from_key(cfg.seed, cfg.trial_id, layer_id,
                                        static_cast<uint32_t>(OpKind::NEURON), i, 0);
    uint64_t mask = sampler.sample_mask(rng);
    if (!mask) continue;
    if (stats) {
      stats->flips += std::popcount(mask);
      ++stats->flipped_ops;
    }
    t.data[i] = static_cast<int32_t>(
        detail::apply_mask(t.data[i], mask, t.format.word_bits));
  }
}

const char* to_string(OpKind k) {
  switch (k) {
    case OpKind::MUL: return "mul";
    case OpKind::ADD: return "add";
    case OpKind::NEURON: return "neuron";
  }
  return "?";
}

const char* to_string(WgStage s) {
  switch (s) {
    case WgStage::MAIN: return "main";
    case WgStage::FILTER: return "filter";
    case WgStage::INPUT: return "input";
    case WgStage::ELEMENTWISE: return "elementwise";
    case WgStage::OUTPUT: return "output";
  }
  return "?";
}

}  // namespace winofi
