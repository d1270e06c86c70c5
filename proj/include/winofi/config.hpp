#pragma once

#include <string>
#include <vector>

#include "winofi/analyze.hpp"
#include "winofi/energy.hpp"
#include "winofi/model.hpp"
#include "winofi/tmr.hpp"

namespace winofi {

// One human-readable JSON config file drives every subcommand; sections per
// module, unknown keys rejected. CLI flags (--seed/--workers/--out) override.
struct ExperimentConfig {
  uint64_t seed = 1;
  int workers = 0;  // 0 = hardware concurrency
  std::string out_dir = "out";
  std::string output_format = "csv";  // csv | json

  struct ModelSection {
    std::string source = "synthetic";  // synthetic | file
    std::string path;
    uint64_t seed = 42;
    std::string profile = "default";
    int word_bits = 16;
    int frac_bits = 10;
  } model;

  struct DatasetSection {
    std::string source = "self_labeled";  // self_labeled | file
    std::string path;
    int num_samples = 200;
    uint64_t seed = 7;
  } dataset;

  struct EvalSection {
    int trials = 5;
    bool include_fc = true;
    // Winograd stages that carry fault sites; empty list = all four stages.
    std::vector<std::string> winograd_stages{"elementwise"};
  } eval;

  struct SweepSection {
    std::vector<double> ber_grid;  // default log grid, see defaults()
    std::vector<std::string> engines{"direct", "winograd"};
    std::vector<std::string> modes{"op_level"};
  } sweep;

  struct AnalysisSection {
    double ber = 0.0;  // 0 = auto-select the ~50%-accuracy grid point
    int trials = 3;
  } analysis;

  struct TmrSection {
    std::vector<double> goals{0.6, 0.7, 0.8, 0.9};  // fractions of fault-free accuracy
    double delta = 0.1;
    int trials = 3;
    double ber = 0.0;  // 0 = auto
    double cost_mul = 1.0;
    double cost_add = 0.2;
  } tmr;

  struct EnergySection {
    std::vector<double> budgets{0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10};
    double grid_step = 0.005;
    int trials = 3;
    std::vector<std::pair<double, double>> curve_anchors;  // empty = default curve
    double power_p0 = 1.0;
    double power_v0 = 0.9;
    double throughput_mul = 256.0;
    double throughput_add = 512.0;
    double layer_overhead_cycles = 1000.0;
    double clock_hz = 667e6;
  } energy;

  static ExperimentConfig defaults();
  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text, const std::string& origin);

  void validate() const;
  std::string canonical_json() const;
  uint64_t config_hash() const;

  // Resolved pieces.
  FxpFormat fxp_format() const;
  uint32_t wg_stage_mask() const;
  FaultConfig base_fault_config() const;
  std::vector<ConvEngine> sweep_engines() const;
  std::vector<FaultMode> sweep_modes() const;
  VoltageBerCurve voltage_curve() const;
  PowerModel power_model() const;
  RuntimeModel runtime_model() const;
  CostModel cost_model() const;

  Model build_model() const;
  Dataset build_dataset(const Model& model, int workers_resolved) const;
};

std::vector<double> default_ber_grid();

}  // namespace winofi
