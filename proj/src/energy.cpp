#include "winofi/energy.hpp"

#include <algorithm>
#include <cmath>

#include "winofi/rng.hpp"

namespace winofi {

void VoltageBerCurve::validate() const {
  if (anchors.size() < 2) raise(ErrorCode::CONFIG_INVALID, "voltage curve needs >= 2 anchors");
  bool all_zero = true;
  for (auto& [v, b] : anchors) {
    if (b < 0.0 || b > 1.0) raise(ErrorCode::CONFIG_INVALID, "voltage curve: ber out of [0,1]");
    if (b != 0.0) all_zero = false;
  }
  for (size_t i = 1; i < anchors.size(); ++i) {
    if (anchors[i].first <= anchors[i - 1].first)
      raise(ErrorCode::CONFIG_INVALID, "voltage curve: voltages must be ascending");
    if (!all_zero && anchors[i].second >= anchors[i - 1].second)
      raise(ErrorCode::CONFIG_INVALID, "voltage curve: ber must be strictly decreasing in V");
  }
}

double ber_at_voltage(const VoltageBerCurve& curve, double voltage) {
  curve.validate();
  if (voltage < curve.v_min() - 1e-12 || voltage > curve.v_max() + 1e-12)
    raise(ErrorCode::OUT_OF_RANGE, "voltage outside the curve's valid range");
  voltage = std::clamp(voltage, curve.v_min(), curve.v_max());
  const auto& a = curve.anchors;
  for (size_t i = 0; i < a.size(); ++i)
    if (voltage == a[i].first) return a[i].second;
  size_t hi = 1;
  while (hi < a.size() - 1 && a[hi].first < voltage) ++hi;
  size_t lo = hi - 1;
  double b_lo = a[lo].second, b_hi = a[hi].second;
  if (b_lo == 0.0 && b_hi == 0.0) return 0.0;
  double t = (voltage - a[lo].first) / (a[hi].first - a[lo].first);
  return std::exp((1.0 - t) * std::log(b_lo) + t * std::log(b_hi));
}

double RuntimeModel::runtime_seconds(const Model& model) const {
  double cycles = 0.0;
  for (uint32_t id : model.weighted_layer_ids()) {
    OpCounts n = model.layer_op_counts(id);
    cycles += static_cast<double>(n.mul) / throughput_mul +
              static_cast<double>(n.add) / throughput_add + layer_overhead_cycles;
  }
  return cycles / clock_hz;
}

namespace {
std::vector<double> voltage_grid(const VoltageBerCurve& curve, double grid_step) {
  if (grid_step <= 0.0) raise(ErrorCode::CONFIG_INVALID, "grid_step must be > 0");
  std::vector<double> v;
  int n = static_cast<int>(std::round((curve.v_max() - curve.v_min()) / grid_step));
  for (int i = 0; i <= n; ++i) {
    double x = curve.v_min() + i * grid_step;
    v.push_back(std::round(x * 1e9) / 1e9);  // keep grid points on clean values
  }
  if (v.back() < curve.v_max() - 1e-12) v.push_back(curve.v_max());
  v.back() = curve.v_max();
  return v;
}
}  // namespace

std::vector<VoltageAccuracy> voltage_accuracy_table(const Model& model, const Dataset& dataset,
                                                    const VoltageBerCurve& curve,
                                                    double grid_step, int trials, uint64_t seed,
                                                    int workers, const FaultConfig& base) {
  curve.validate();
  std::vector<VoltageAccuracy> table;
  for (double v : voltage_grid(curve, grid_step)) {
    VoltageAccuracy cell;
    cell.voltage = v;
    cell.ber = ber_at_voltage(curve, v);
    FaultConfig cfg = base;
    cfg.mode = cell.ber > 0.0 ? FaultMode::OP_LEVEL : FaultMode::NONE;
    cfg.ber = cell.ber;
    cfg.seed = seed;
    cell.acc = evaluate_accuracy(model, dataset, cfg, trials, workers);
    table.push_back(std::move(cell));
  }
  return table;
}

void refine_voltage_table(std::vector<VoltageAccuracy>& table, const Model& model,
                          const Dataset& dataset, const std::vector<double>& thresholds,
                          double window, int refine_factor, int trials, uint64_t seed,
                          int workers, const FaultConfig& base) {
  if (refine_factor <= 1 || table.empty()) return;
  // The pick for a threshold is the first cell whose ci_lo clears it, so
  // only that cell and its neighbors can change the decision. Everything
  // else stays at base precision.
  std::vector<bool> refine(table.size(), false);
  for (double t : thresholds) {
    size_t cross = table.size();
    for (size_t i = 0; i < table.size(); ++i) {
      double lo = table[i].ber == 0.0 ? table[i].acc.accuracy : table[i].acc.ci_lo;
      if (lo >= t) {
        cross = i;
        break;
      }
    }
    size_t anchor = cross == table.size() ? table.size() - 1 : cross;
    for (size_t i = anchor >= 2 ? anchor - 2 : 0; i <= anchor + 1 && i < table.size(); ++i)
      refine[i] = true;
    // near-threshold stragglers just below the crossing
    for (size_t i = 0; i < table.size(); ++i) {
      double lo = table[i].ber == 0.0 ? table[i].acc.accuracy : table[i].acc.ci_lo;
      if (lo < t && lo >= t - window) refine[i] = true;
    }
  }
  for (size_t i = 0; i < table.size(); ++i) {
    if (!refine[i] || table[i].ber <= 0.0) continue;
    FaultConfig cfg = base;
    cfg.mode = FaultMode::OP_LEVEL;
    cfg.ber = table[i].ber;
    cfg.seed = seed;
    table[i].acc = evaluate_accuracy(model, dataset, cfg, trials * refine_factor, workers);
  }
}

VoltagePick min_safe_voltage(const std::vector<VoltageAccuracy>& table,
                             double fault_free_accuracy, double loss_budget) {
  if (loss_budget <= 0.0 || loss_budget > 1.0)
    raise(ErrorCode::CONFIG_INVALID, "loss_budget must be in (0, 1]");
  double threshold = fault_free_accuracy - loss_budget;
  for (const auto& cell : table) {
    // a zero-ber cell is fault-free and therefore exact, not a Monte-Carlo
    // estimate; the CI lower bound applies only where injection randomness
    // exists
    double lo = cell.ber == 0.0 ? cell.acc.accuracy : cell.acc.ci_lo;
    if (lo >= threshold) return {cell.voltage, cell.ber, cell.acc};
  }
  raise(ErrorCode::INFEASIBLE_BUDGET, "no grid voltage meets the accuracy-loss budget");
}

VoltagePick min_safe_voltage(const Model& model, const Dataset& dataset, TmrMode mode,
                             const VoltageBerCurve& curve, double loss_budget, double grid_step,
                             int trials, uint64_t seed, int workers, const FaultConfig& base) {
  // WG_WO_AFT runs winograd but gates its voltage by the direct engine's
  // accuracy curve ("a straightforward implementation of ST-Conv").
  ConvEngine gate = mode == TmrMode::WG_W_AFT ? ConvEngine::WINOGRAD : ConvEngine::DIRECT;
  Model gated = model.with_engines(gate);
  FaultConfig none;
  double fault_free = evaluate_accuracy(gated, dataset, none, 1, workers).accuracy;
  auto table =
      voltage_accuracy_table(gated, dataset, curve, grid_step, trials, seed, workers, base);
  refine_voltage_table(table, gated, dataset, {fault_free - loss_budget}, 0.03, 5, trials, seed,
                       workers, base);
  return min_safe_voltage(table, fault_free, loss_budget);
}

const EnergyCell* EnergyReport::find(TmrMode mode, double budget) const {
  for (const auto& c : cells)
    if (c.mode == mode && c.budget == budget) return &c;
  return nullptr;
}

EnergyReport energy_report(const Model& model, const Dataset& dataset,
                           const std::vector<TmrMode>& modes, const std::vector<double>& budgets,
                           const VoltageBerCurve& curve, const PowerModel& power,
                           const RuntimeModel& runtime, double grid_step, int trials,
                           uint64_t seed, int workers, const FaultConfig& base) {
  curve.validate();
  EnergyReport rep;
  Model direct = model.with_engines(ConvEngine::DIRECT);
  Model winograd = model.with_engines(ConvEngine::WINOGRAD);
  FaultConfig none;
  rep.fault_free_accuracy = evaluate_accuracy(direct, dataset, none, 1, workers).accuracy;
  rep.baseline_voltage = curve.v_max();
  rep.baseline_power = power.power(rep.baseline_voltage);
  rep.baseline_runtime = runtime.runtime_seconds(direct);
  rep.baseline_energy = rep.baseline_power * rep.baseline_runtime;

  bool need_direct = false, need_wg = false;
  for (TmrMode m : modes) (m == TmrMode::WG_W_AFT ? need_wg : need_direct) = true;
  std::vector<double> thresholds;
  for (double b : budgets) thresholds.push_back(rep.fault_free_accuracy - b);
  if (need_direct) {
    rep.direct_table =
        voltage_accuracy_table(direct, dataset, curve, grid_step, trials, seed, workers, base);
    refine_voltage_table(rep.direct_table, direct, dataset, thresholds, 0.03, 5, trials, seed,
                         workers, base);
  }
  if (need_wg) {
    rep.winograd_table =
        voltage_accuracy_table(winograd, dataset, curve, grid_step, trials, seed, workers, base);
    refine_voltage_table(rep.winograd_table, winograd, dataset, thresholds, 0.03, 5, trials, seed,
                         workers, base);
  }

  for (TmrMode mode : modes) {
    const auto& table = mode == TmrMode::WG_W_AFT ? rep.winograd_table : rep.direct_table;
    double rt = runtime.runtime_seconds(mode == TmrMode::ST_CONV ? direct : winograd);
    for (double budget : budgets) {
      EnergyCell cell;
      cell.mode = mode;
      cell.budget = budget;
      cell.runtime = rt;
      try {
        cell.pick = min_safe_voltage(table, rep.fault_free_accuracy, budget);
        cell.power = power.power(cell.pick.voltage);
        cell.energy = cell.power * cell.runtime;
        cell.normalized = cell.energy / rep.baseline_energy;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::INFEASIBLE_BUDGET) throw;
        cell.feasible = false;
      }
      rep.cells.push_back(std::move(cell));
    }
  }
  return rep;
}

}  // namespace winofi
