#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "winofi/conv.hpp"
#include "winofi/fault.hpp"
#include "winofi/fxp.hpp"
#include "winofi/stats.hpp"

namespace winofi {

enum class LayerKind : uint8_t { CONV = 0, FC = 1, RELU = 2, MAXPOOL2 = 3, FLATTEN = 4 };
const char* to_string(LayerKind k);

struct LayerSpec {
  LayerKind kind = LayerKind::CONV;
  std::string name;
  ConvEngine engine = ConvEngine::DIRECT;  // CONV only
  ConvSpec conv;                           // CONV only
  int fc_in = 0, fc_out = 0;               // FC only

  bool weighted() const { return kind == LayerKind::CONV || kind == LayerKind::FC; }
};

struct Model {
  std::string name;
  uint64_t seed = 0;
  FxpFormat format = FxpFormat::int16_default();
  DatapathSpec datapath;
  int in_c = 1, in_h = 0, in_w = 0;
  std::vector<LayerSpec> layers;
  std::vector<FxpTensor> weights;  // empty tensor for weightless layers

  int num_classes() const;
  std::vector<uint32_t> weighted_layer_ids() const;
  OpCounts layer_op_counts(uint32_t layer_id) const;  // uses the layer's engine
  OpCounts total_op_counts() const;
  uint64_t layer_sites(uint32_t layer_id, OpKind kind) const;
  void set_conv_engines(ConvEngine engine);
  Model with_engines(ConvEngine engine) const;
  void validate() const;
};

struct Dataset {
  enum class Provenance : uint8_t { SELF_LABELED = 0, EXTERNAL = 1 };
  int in_c = 1, in_h = 0, in_w = 0;
  int num_classes = 0;
  FxpFormat format;
  uint64_t seed = 0;
  Provenance provenance = Provenance::SELF_LABELED;
  std::vector<FxpTensor> inputs;
  std::vector<int32_t> labels;

  size_t size() const { return inputs.size(); }
  void validate() const;
};

struct AccuracyResult {
  double accuracy = 0.0;
  double ci_lo = 0.0, ci_hi = 1.0;
  uint64_t correct = 0, total = 0;
  int samples = 0, trials = 0;
  uint64_t seed = 0;
  InjectionStats stats;
};

// Deterministic desk-scale benchmark model. The default profile is four
// 3x3 conv layers of widths 8/16/16/32 plus two FC layers, 10 classes,
// 16x16 single-channel input; weights are seeded scaled-uniform, quantized.
Model generate_synthetic_model(uint64_t seed, const std::string& profile = "default",
                               FxpFormat format = FxpFormat::int16_default());

// Seeded uniform inputs in (-1, 1), unlabeled (labels = -1).
Dataset generate_inputs(const Model& model, int num_samples, uint64_t seed);

// Labels every input with the fault-free DIRECT-engine argmax, making
// fault-free accuracy exactly 1.0 so degradation is directly measurable.
void self_label(const Model& model, Dataset& dataset, int workers = 1);

// Forward pass with every conv dispatched to its engine and all primitive
// ops hooked per cfg; NEURON_LEVEL corrupts finished layer outputs instead.
FxpTensor infer(const Model& model, const FxpTensor& input, const FaultConfig& cfg,
                InjectionStats* stats = nullptr);

// Same, keeping every layer's output (for probes and debugging).
std::vector<FxpTensor> infer_trace(const Model& model, const FxpTensor& input,
                                   const FaultConfig& cfg, InjectionStats* stats = nullptr);

// Runs (sample, trial) cells with trial_id = trial * num_samples + sample,
// aggregates correct counts and attaches a Wilson 95% CI. Deterministic for
// any worker count.
AccuracyResult evaluate_accuracy(const Model& model, const Dataset& dataset,
                                 const FaultConfig& cfg_template, int trials,
                                 int workers = 1);

}  // namespace winofi
