#pragma once

#include <map>
#include <vector>

#include "winofi/analyze.hpp"
#include "winofi/model.hpp"

namespace winofi {

enum class TmrMode : uint8_t { ST_CONV = 0, WG_WO_AFT = 1, WG_W_AFT = 2 };
const char* to_string(TmrMode m);

// The paper never fixes the unit of TMR overhead; reports carry raw op
// counts alongside this weighted view (multiplier-dominated by default).
struct CostModel {
  double cost_mul = 1.0;
  double cost_add = 0.2;
};

struct TmrPlan {
  TmrMode mode = TmrMode::ST_CONV;
  double ber = 0.0;
  double goal = 0.0;  // absolute accuracy goal
  std::map<uint32_t, double> layer_fraction;  // fraction of the layer's sites
  ProtectionSet protection;                   // per-kind fractions, mul-first
  AccuracyResult achieved;
  // Realized protected-site counts (exact membership enumeration) and the
  // two extra executions each protected op costs.
  uint64_t protected_mul = 0, protected_add = 0;
  uint64_t overhead_mul_ops = 0, overhead_add_ops = 0;  // = 2 * protected
  double overhead_weighted = 0.0;
  int iterations = 0;

  bool empty() const { return protected_mul == 0 && protected_add == 0; }
};

ConvEngine tmr_exec_engine(TmrMode mode);
ConvEngine tmr_vf_engine(TmrMode mode);

// Layer fraction -> per-kind fractions, multiplications first: protection
// fills MUL sites until exhausted, then ADD sites.
ProtectionSet::Fractions split_mul_first(double layer_fraction, uint64_t n_mul, uint64_t n_add);

// Sites of a layer that can actually fault under the scope in `base`
// (stage mask, FC switch). Protection fractions, realized counts, and
// overhead all live on this pool: ops outside the fault model are never
// replicated.
uint64_t fault_prone_sites(const Model& model, uint32_t layer_id, OpKind kind,
                           const FaultConfig& base);

// Exact protected-site counts for a protection set on a model's engine,
// restricted to fault-prone sites.
void count_protected_sites(const Model& model, const ProtectionSet& protection,
                           const FaultConfig& base, uint64_t* protected_mul,
                           uint64_t* protected_add);

// Fine-grained heuristic TMR: rank layers by vulnerability factor, protect
// delta of the top layer's sites per iteration (priority = VF * unprotected
// fraction), multiplications first, until mean accuracy >= goal. ST_CONV
// plans and runs on the direct engine; WG_W_AFT on winograd; WG_WO_AFT
// copies the ST_CONV plan fractions onto the winograd engine without
// re-running the stopping rule (it is not aware of winograd's tolerance).
TmrPlan plan_tmr(const Model& model, const Dataset& dataset, TmrMode mode, double ber,
                 double goal, double delta, int trials, const CostModel& cost,
                 uint64_t seed, int workers, const FaultConfig& base = {});

// Weighted overhead ratio vs the ST_CONV reference at the same goal. Both
// empty -> 1.0; empty reference with a non-empty plan is an error.
double overhead_ratio(const TmrPlan& plan, const TmrPlan& reference);
double overhead_ratio_raw(const TmrPlan& plan, const TmrPlan& reference);

struct TmrComparisonCell {
  TmrMode mode;
  double goal_frac = 0.0;  // relative to fault-free accuracy
  TmrPlan plan;
  double normalized = 0.0;
  double normalized_raw = 0.0;
};

struct TmrComparison {
  double ber = 0.0;
  double fault_free_accuracy = 0.0;
  std::vector<double> goal_fracs;
  std::vector<TmrComparisonCell> cells;

  const TmrComparisonCell* find(TmrMode mode, double goal_frac) const;
};

// One normalized-overhead series per mode over the goal grid. Shares one
// planner trajectory per iterating mode across goals.
TmrComparison compare_modes(const Model& model, const Dataset& dataset, double ber,
                            const std::vector<double>& goal_fracs, double delta, int trials,
                            const CostModel& cost, uint64_t seed, int workers,
                            const FaultConfig& base = {});

}  // namespace winofi
