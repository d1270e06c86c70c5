#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "winofi/model.hpp"
#include "winofi/tmr.hpp"

namespace winofi {

// Voltage -> BER mapping with log-linear interpolation between anchors.
// Anchor values are a synthetic calibration, fully overridable via config;
// every criterion on this module is ordinal, never tied to these numbers.
struct VoltageBerCurve {
  std::vector<std::pair<double, double>> anchors;  // (volts, ber), volts ascending

  double v_min() const { return anchors.front().first; }
  double v_max() const { return anchors.back().first; }
  void validate() const;

  static VoltageBerCurve default_curve() {
    return {{{0.70, 1e-2}, {0.74, 1e-4}, {0.78, 1e-6}, {0.80, 1e-8}, {0.82, 1e-10}, {0.90, 1e-14}}};
  }
  static VoltageBerCurve zero_curve(double v_lo = 0.70, double v_hi = 0.90) {
    return {{{v_lo, 0.0}, {v_hi, 0.0}}};
  }
};

double ber_at_voltage(const VoltageBerCurve& curve, double voltage);

// Dynamic-only power scaling at fixed frequency: P(V) = P0 * (V/V0)^2.
struct PowerModel {
  double p0 = 1.0;
  double v0 = 0.9;
  double power(double voltage) const { return p0 * (voltage / v0) * (voltage / v0); }
};

// Analytical op-throughput runtime stand-in for a systolic accelerator.
struct RuntimeModel {
  double throughput_mul = 256.0;  // ops/cycle
  double throughput_add = 512.0;
  double layer_overhead_cycles = 1000.0;  // per weighted layer
  double clock_hz = 667e6;

  double runtime_seconds(const Model& model) const;
};

struct VoltageAccuracy {
  double voltage = 0.0;
  double ber = 0.0;
  AccuracyResult acc;
};

// Accuracy at every grid voltage for one engine; shared across budgets and
// modes so each engine is measured once.
std::vector<VoltageAccuracy> voltage_accuracy_table(const Model& model, const Dataset& dataset,
                                                    const VoltageBerCurve& curve,
                                                    double grid_step, int trials, uint64_t seed,
                                                    int workers, const FaultConfig& base = {});

// Re-measures table cells whose accuracy sits within `window` of any safety
// threshold with `refine_factor` times the trials. Voltage picks are decided
// at these knife-edge cells, so concentrating samples there keeps the picks
// stable without paying for precision across the whole grid. Deterministic:
// the refinement decision depends only on already-deterministic estimates.
void refine_voltage_table(std::vector<VoltageAccuracy>& table, const Model& model,
                          const Dataset& dataset, const std::vector<double>& thresholds,
                          double window, int refine_factor, int trials, uint64_t seed,
                          int workers, const FaultConfig& base = {});

struct VoltagePick {
  double voltage = 0.0;
  double ber = 0.0;
  AccuracyResult acc;
};

// Lowest grid voltage whose measured accuracy (CI lower bound) stays within
// loss_budget of the fault-free accuracy. Throws INFEASIBLE_BUDGET when even
// v_max violates the budget.
VoltagePick min_safe_voltage(const std::vector<VoltageAccuracy>& table, double fault_free_accuracy,
                             double loss_budget);
VoltagePick min_safe_voltage(const Model& model, const Dataset& dataset, TmrMode mode,
                             const VoltageBerCurve& curve, double loss_budget, double grid_step,
                             int trials, uint64_t seed, int workers,
                             const FaultConfig& base = {});

struct EnergyCell {
  TmrMode mode;
  double budget = 0.0;
  bool feasible = true;
  VoltagePick pick;
  double power = 0.0;
  double runtime = 0.0;
  double energy = 0.0;
  double normalized = 0.0;  // vs the fixed-v0 DIRECT baseline
};

struct EnergyReport {
  double fault_free_accuracy = 0.0;
  double baseline_voltage = 0.0;
  double baseline_power = 0.0;
  double baseline_runtime = 0.0;
  double baseline_energy = 0.0;
  std::vector<VoltageAccuracy> direct_table;
  std::vector<VoltageAccuracy> winograd_table;
  std::vector<EnergyCell> cells;

  const EnergyCell* find(TmrMode mode, double budget) const;
};

// Energy accounting per (mode, budget): chosen voltage, power * runtime,
// normalized to the direct engine pinned at the curve's top voltage. ST runs
// direct; both WG modes run winograd, but WG_WO_AFT picks its voltage from
// the direct engine's accuracy curve (it is not aware of winograd's margin).
EnergyReport energy_report(const Model& model, const Dataset& dataset,
                           const std::vector<TmrMode>& modes, const std::vector<double>& budgets,
                           const VoltageBerCurve& curve, const PowerModel& power,
                           const RuntimeModel& runtime, double grid_step, int trials,
                           uint64_t seed, int workers, const FaultConfig& base = {});

}  // namespace winofi
