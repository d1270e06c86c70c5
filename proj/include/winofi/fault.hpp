#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>

#include "winofi/fxp.hpp"
#include "winofi/rng.hpp"
#include "winofi/site.hpp"

namespace winofi {

enum class FaultMode : uint8_t { NONE = 0, OP_LEVEL = 1, NEURON_LEVEL = 2 };

// Pseudo-random site subset: a site is protected iff
// mix(selection_seed, layer, kind, site) < fraction * 2^64. Membership is a
// pure function of the selection seed, independent of trial_id.
struct ProtectionSet {
  struct Fractions {
    double mul = 0.0;
    double add = 0.0;
  };

  uint64_t selection_seed = 0;
  std::map<uint32_t, Fractions> layer_fractions;

  bool empty() const;
  double fraction(uint32_t layer_id, OpKind kind) const;
  void set_fraction(uint32_t layer_id, OpKind kind, double fraction);
  bool is_protected(uint32_t layer_id, OpKind kind, uint64_t site_index) const;

  static uint64_t fraction_threshold(double fraction);
  static uint64_t member_hash(uint64_t selection_seed, uint32_t layer_id,
                              OpKind kind, uint64_t site_index);
};

// Fully determines a fault universe: (model, input, FaultConfig) -> output
// is a pure function regardless of thread count.
struct FaultConfig {
  FaultMode mode = FaultMode::NONE;
  double ber = 0.0;
  uint64_t seed = 0;
  uint64_t trial_id = 0;
  std::optional<std::set<uint32_t>> layer_scope;  // nullopt = all layers
  std::optional<uint32_t> excluded_layer;
  bool scope_mul = true;
  bool scope_add = true;
  uint32_t wg_stage_mask = kAllStages;
  bool include_fc = true;       // FC layers carry fault sites by default
  bool include_nonweighted = false;  // relu/pool outputs in NEURON mode
  ProtectionSet protection;

  bool layer_in_scope(uint32_t layer_id) const {
    if (excluded_layer && *excluded_layer == layer_id) return false;
    if (layer_scope && !layer_scope->count(layer_id)) return false;
    return true;
  }
  bool kind_in_scope(OpKind k) const {
    return k == OpKind::MUL ? scope_mul : (k == OpKind::ADD ? scope_add : true);
  }
};

struct InjectionStats {
  uint64_t ops_mul = 0;
  uint64_t ops_add = 0;
  uint64_t flips = 0;
  uint64_t flipped_ops = 0;
  uint64_t protected_ops = 0;
  uint64_t neuron_words = 0;
  uint64_t saturations = 0;

  void add(const InjectionStats& o) {
    ops_mul += o.ops_mul;
    ops_add += o.ops_add;
    flips += o.flips;
    flipped_ops += o.flipped_ops;
    protected_ops += o.protected_ops;
    neuron_words += o.neuron_words;
    saturations += o.saturations;
  }
};

// Per-(ber,width) sampler. Draws the first flipped bit position with the
// geometric-skip method; the resulting flip pattern is distributed exactly
// as `width` independent Bernoulli(ber) trials. The common no-flip case
// costs one draw and one integer compare.
class FlipSampler {
 public:
  FlipSampler() = default;
  FlipSampler(double ber, int width);

  uint64_t sample_mask(RngStream& rng) const;
  double ber() const { return ber_; }
  int width() const { return width_; }

 private:
  double ber_ = 0.0;
  int width_ = 0;
  uint64_t noflip_cutoff_ = ~uint64_t{0};  // u64 draw < cutoff -> no flips
  double inv_ln_1m_ber_ = 0.0;
  bool flip_all_ = false;
  bool never_ = true;
};

// Each of the low `width` bits of value flips independently with
// probability ber. Result is reinterpreted as a `width`-bit word when the
// input fits one (true word semantics); wider values keep their high bits.
int64_t flip_bits(int64_t value, int width, double ber, RngStream& rng,
                  InjectionStats* stats = nullptr);

// Per-bit reference path, one uniform draw per bit. Test oracle for the
// geometric-skip sampler.
int64_t flip_bits_naive(int64_t value, int width, double ber, RngStream& rng,
                        InjectionStats* stats = nullptr);

// Bitwise majority of three replicas.
inline uint64_t tmr_vote(uint64_t a, uint64_t b, uint64_t c) {
  return (a & b) | (a & c) | (b & c);
}

// Operation-level injection for one site, honoring scope masks and
// protection (protected sites run three replica injections + majority
// vote). `width` is the datapath width of the op's result word.
int64_t inject_op(const OpSite& site, int64_t value, int width,
                  const FaultConfig& cfg, InjectionStats* stats = nullptr);

// Neuron-level injection: flips bits of every activation word of a finished
// layer output, sites keyed by (layer, flat index).
void inject_neurons(FxpTensor& t, uint32_t layer_id, const FaultConfig& cfg,
                    InjectionStats* stats = nullptr);

namespace detail {
int64_t apply_mask(int64_t value, uint64_t mask, int width);
}

}  // namespace winofi
