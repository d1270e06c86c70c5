#pragma once

#include <string>
#include <vector>

#include "winofi/model.hpp"

namespace winofi {

const char* to_string(FaultMode m);

struct SweepSpec {
  std::vector<double> ber_grid;  // sorted ascending, non-empty
  std::vector<ConvEngine> engines{ConvEngine::DIRECT, ConvEngine::WINOGRAD};
  std::vector<FaultMode> modes{FaultMode::OP_LEVEL};
  int trials = 5;
  uint64_t seed = 0;
  int workers = 1;
  FaultConfig base;  // scope/protection template (mode/ber/seed overwritten)

  void validate() const;
};

struct SweepPoint {
  ConvEngine engine;
  FaultMode mode;
  double ber;
  AccuracyResult acc;
};

struct ImprovementPoint {
  FaultMode mode;
  double ber;
  double improvement;  // winograd accuracy - direct accuracy
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::vector<ImprovementPoint> improvement;

  const SweepPoint* find(ConvEngine e, FaultMode m, double ber) const;
};

// Accuracy-vs-ber series per (engine, mode), plus the winograd-minus-
// standard improvement series per mode.
SweepResult ber_sweep(const Model& model, const Dataset& dataset, const SweepSpec& spec);

// Runs both injection modes for both engines over the grid. The neuron-level
// series must be indistinguishable between engines; the op-level series is
// where they separate.
SweepResult fi_mode_compare(const Model& model, const Dataset& dataset, SweepSpec spec);

struct LayerVf {
  uint32_t layer_id = 0;
  std::string name;
  AccuracyResult exempted;  // all layers faulty except this one
  double vf = 0.0;          // exempted - baseline
  uint64_t n_mul = 0, n_add = 0;
};

struct LayerVulnReport {
  ConvEngine engine = ConvEngine::DIRECT;
  double ber = 0.0;
  AccuracyResult baseline;  // all layers faulty
  std::vector<LayerVf> layers;
  double spearman_vf_vs_mul = 0.0;
};

// Per-layer vulnerability factors with a paired-seed design: the exempted
// and baseline runs share (seed, trial_id) streams so VF variance comes
// only from the exempted layer's faults.
LayerVulnReport layer_vulnerability(const Model& model, const Dataset& dataset, double ber,
                                    ConvEngine engine, int trials, uint64_t seed, int workers,
                                    const FaultConfig& base = {});

struct OpTypeReport {
  ConvEngine engine = ConvEngine::DIRECT;
  double ber = 0.0;
  AccuracyResult all_faulty;
  AccuracyResult mul_fault_free;  // op_kind_scope = {ADD}
  AccuracyResult add_fault_free;  // op_kind_scope = {MUL}
  double sensitivity_mul = 0.0;   // mul_fault_free - all_faulty
  double sensitivity_add = 0.0;
};

OpTypeReport op_type_vulnerability(const Model& model, const Dataset& dataset, double ber,
                                   ConvEngine engine, int trials, uint64_t seed, int workers,
                                   const FaultConfig& base = {});

// Grid point whose direct-engine op-level accuracy is closest to 50%; the
// analyses freeze this value into their reports.
double pick_analysis_ber(const Model& model, const Dataset& dataset,
                         const std::vector<double>& grid, int trials, uint64_t seed,
                         int workers, const FaultConfig& base = {});

// CI-aware comparisons used by the analyses and the acceptance suite.
bool ci_overlap(const AccuracyResult& a, const AccuracyResult& b);
bool ci_separated_above(const AccuracyResult& hi, const AccuracyResult& lo);

}  // namespace winofi
