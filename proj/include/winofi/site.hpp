#pragma once

#include <cstdint>

namespace winofi {

enum class OpKind : uint8_t { MUL = 0, ADD = 1, NEURON = 2 };

// Which part of an engine an op belongs to. MAIN covers direct conv and FC
// MACs; the four winograd stages allow scoping faults per stage.
enum class WgStage : uint8_t { MAIN = 0, FILTER = 1, INPUT = 2, ELEMENTWISE = 3, OUTPUT = 4 };
inline constexpr int kNumStages = 5;

inline constexpr uint32_t stage_bit(WgStage s) { return 1u << static_cast<int>(s); }
inline constexpr uint32_t kAllStages =
    stage_bit(WgStage::MAIN) | stage_bit(WgStage::FILTER) | stage_bit(WgStage::INPUT) |
    stage_bit(WgStage::ELEMENTWISE) | stage_bit(WgStage::OUTPUT);

// Deterministic identity of one primitive op inside one inference. The index
// is a pure function of coordinates (output position, channel, tap/tile),
// never of execution order, so injections are schedule-independent.
struct OpSite {
  uint32_t layer_id = 0;
  OpKind kind = OpKind::MUL;
  uint64_t index = 0;
};

const char* to_string(OpKind k);
const char* to_string(WgStage s);

}  // namespace winofi
