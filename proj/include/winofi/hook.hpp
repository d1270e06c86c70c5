#pragma once

#include <array>
#include <bit>

#include "winofi/fault.hpp"
#include "winofi/site.hpp"

namespace winofi {

// Engines route every primitive mul/add result through a hook:
//   hook.set_layer(layer_id, is_fc) once per layer,
//   v' = hook.mul(site_index, stage, v) / hook.add(site_index, stage, v).
// Hooks must be pure functions of (site, value, config) so outputs are
// schedule-independent.

struct IdentityHook {
  void set_layer(uint32_t, bool) {}
  int64_t mul(uint64_t, WgStage, int64_t v) { return v; }
  int64_t add(uint64_t, WgStage, int64_t v) { return v; }
};

// Counts hook invocations per kind and stage; reconciled against the
// closed-form count_ops formulas in tests.
struct CountingHook {
  uint64_t mul_count = 0;
  uint64_t add_count = 0;
  std::array<uint64_t, kNumStages> mul_by_stage{};
  std::array<uint64_t, kNumStages> add_by_stage{};

  void set_layer(uint32_t, bool) {}
  int64_t mul(uint64_t, WgStage stage, int64_t v) {
    ++mul_count;
    ++mul_by_stage[static_cast<int>(stage)];
    return v;
  }
  int64_t add(uint64_t, WgStage stage, int64_t v) {
    ++add_count;
    ++add_by_stage[static_cast<int>(stage)];
    return v;
  }
};

// Operation-level bit-flip injection. Precomputes per-layer key prefixes and
// per-width samplers so the common (no-flip) path is one hash and one
// compare. Behaves exactly like inject_op() at every site; the equivalence
// is unit-tested.
class FaultHook {
 public:
  FaultHook(const FaultConfig& cfg, const DatapathSpec& dp)
      : cfg_(cfg),
        mul_sampler_(cfg.mode == FaultMode::OP_LEVEL ? cfg.ber : 0.0, dp.mul_out_bits),
        add_sampler_(cfg.mode == FaultMode::OP_LEVEL ? cfg.ber : 0.0, dp.acc_bits),
        mul_width_(dp.mul_out_bits),
        add_width_(dp.acc_bits) {
    active_ = cfg.mode == FaultMode::OP_LEVEL && cfg.ber > 0.0;
  }

  void set_layer(uint32_t layer_id, bool is_fc) {
    layer_on_ = active_ && cfg_.layer_in_scope(layer_id) && (!is_fc || cfg_.include_fc);
    if (!layer_on_) return;
    uint64_t h = mix64(cfg_.seed, cfg_.trial_id);
    h = mix64(h, layer_id);
    for (uint32_t r = 0; r < 3; ++r) {
      mul_prefix_[r] = mix64(h, (static_cast<uint64_t>(OpKind::MUL) << 8) | r);
      add_prefix_[r] = mix64(h, (static_cast<uint64_t>(OpKind::ADD) << 8) | r);
    }
    prot_prefix_mul_ = mix64(cfg_.protection.selection_seed,
                             (uint64_t{layer_id} << 8) | static_cast<uint64_t>(OpKind::MUL));
    prot_prefix_add_ = mix64(cfg_.protection.selection_seed,
                             (uint64_t{layer_id} << 8) | static_cast<uint64_t>(OpKind::ADD));
    prot_cut_mul_ = ProtectionSet::fraction_threshold(cfg_.protection.fraction(layer_id, OpKind::MUL));
    prot_cut_add_ = ProtectionSet::fraction_threshold(cfg_.protection.fraction(layer_id, OpKind::ADD));
  }

  int64_t mul(uint64_t site, WgStage stage, int64_t v) {
    ++stats.ops_mul;
    if (!layer_on_ || !cfg_.scope_mul || !(cfg_.wg_stage_mask & stage_bit(stage))) return v;
    return corrupt(site, v, mul_sampler_, mul_width_, mul_prefix_, prot_prefix_mul_, prot_cut_mul_);
  }

  int64_t add(uint64_t site, WgStage stage, int64_t v) {
    ++stats.ops_add;
    if (!layer_on_ || !cfg_.scope_add || !(cfg_.wg_stage_mask & stage_bit(stage))) return v;
    return corrupt(site, v, add_sampler_, add_width_, add_prefix_, prot_prefix_add_, prot_cut_add_);
  }

  InjectionStats stats;

 private:
  int64_t corrupt(uint64_t site, int64_t v, const FlipSampler& sampler, int width,
                  const uint64_t prefix[3], uint64_t prot_prefix, uint64_t prot_cut) {
    if (prot_cut != 0 &&
        (prot_cut == ~uint64_t{0} || mix64(prot_prefix, site) < prot_cut)) {
      ++stats.protected_ops;
      uint64_t m0, m1, m2;
      {
        RngStream r(mix64(prefix[0], site));
        m0 = sampler.sample_mask(r);
      }
      {
        RngStream r(mix64(prefix[1], site));
        m1 = sampler.sample_mask(r);
      }
      {
        RngStream r(mix64(prefix[2], site));
        m2 = sampler.sample_mask(r);
      }
      uint64_t residual = tmr_vote(m0, m1, m2);
      if (residual) {
        stats.flips += std::popcount(residual);
        ++stats.flipped_ops;
      }
      return detail::apply_mask(v, residual, width);
    }
    RngStream rng(mix64(prefix[0], site));
    uint64_t mask = sampler.sample_mask(rng);
    if (mask) {
      stats.flips += std::popcount(mask);
      ++stats.flipped_ops;
    }
    return detail::apply_mask(v, mask, width);
  }

  FaultConfig cfg_;
  FlipSampler mul_sampler_, add_sampler_;
  int mul_width_, add_width_;
  bool active_ = false;
  bool layer_on_ = false;
  uint64_t mul_prefix_[3]{}, add_prefix_[3]{};
  uint64_t prot_prefix_mul_ = 0, prot_prefix_add_ = 0;
  uint64_t prot_cut_mul_ = 0, prot_cut_add_ = 0;
};

}  // namespace winofi
