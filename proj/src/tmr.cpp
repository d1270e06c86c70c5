#include "winofi/tmr.hpp"

#include <algorithm>
#include <cmath>

#include "winofi/rng.hpp"

namespace winofi {

const char* to_string(TmrMode m) {
  switch (m) {
    case TmrMode::ST_CONV: return "st_conv";
    case TmrMode::WG_WO_AFT: return "wg_wo_aft";
    case TmrMode::WG_W_AFT: return "wg_w_aft";
  }
  return "?";
}

ConvEngine tmr_exec_engine(TmrMode mode) {
  return mode == TmrMode::ST_CONV ? ConvEngine::DIRECT : ConvEngine::WINOGRAD;
}

// WG_WO_AFT evaluates layer vulnerability with standard convolution; only
// WG_W_AFT is aware of winograd's own behavior.
ConvEngine tmr_vf_engine(TmrMode mode) {
  return mode == TmrMode::WG_W_AFT ? ConvEngine::WINOGRAD : ConvEngine::DIRECT;
}

ProtectionSet::Fractions split_mul_first(double layer_fraction, uint64_t n_mul, uint64_t n_add) {
  layer_fraction = std::clamp(layer_fraction, 0.0, 1.0);
  double total = static_cast<double>(n_mul + n_add);
  double target = layer_fraction * total;
  ProtectionSet::Fractions f;
  if (n_mul == 0 && n_add == 0) return f;
  if (target <= static_cast<double>(n_mul)) {
    f.mul = n_mul ? target / static_cast<double>(n_mul) : 0.0;
    f.add = 0.0;
  } else {
    f.mul = 1.0;
    f.add = n_add ? (target - static_cast<double>(n_mul)) / static_cast<double>(n_add) : 0.0;
  }
  f.mul = std::clamp(f.mul, 0.0, 1.0);
  f.add = std::clamp(f.add, 0.0, 1.0);
  return f;
}

namespace {
std::vector<SiteRange> layer_site_ranges(const LayerSpec& l, OpKind kind) {
  if (l.kind == LayerKind::CONV) return conv_site_ranges(l.conv, l.engine, kind);
  if (l.kind == LayerKind::FC) {
    uint64_t n = static_cast<uint64_t>(l.fc_in) * l.fc_out;
    return {{WgStage::MAIN, 0, n}};
  }
  return {};
}

bool range_in_scope(const LayerSpec& l, const SiteRange& r, const FaultConfig& base) {
  if (l.kind == LayerKind::FC && !base.include_fc) return false;
  return (base.wg_stage_mask & stage_bit(r.stage)) != 0;
}
}  // namespace

uint64_t fault_prone_sites(const Model& model, uint32_t layer_id, OpKind kind,
                           const FaultConfig& base) {
  const LayerSpec& l = model.layers.at(layer_id);
  uint64_t total = 0;
  for (const SiteRange& r : layer_site_ranges(l, kind))
    if (range_in_scope(l, r, base)) total += r.end - r.begin;
  return total;
}

void count_protected_sites(const Model& model, const ProtectionSet& protection,
                           const FaultConfig& base, uint64_t* protected_mul,
                           uint64_t* protected_add) {
  uint64_t pm = 0, pa = 0;
  for (uint32_t id : model.weighted_layer_ids()) {
    const LayerSpec& l = model.layers[id];
    for (OpKind kind : {OpKind::MUL, OpKind::ADD}) {
      double f = protection.fraction(id, kind);
      if (f <= 0.0) continue;
      uint64_t cut = ProtectionSet::fraction_threshold(f);
      uint64_t prefix = mix64(protection.selection_seed,
                              (uint64_t{id} << 8) | static_cast<uint64_t>(kind));
      uint64_t count = 0;
      for (const SiteRange& r : layer_site_ranges(l, kind)) {
        if (!range_in_scope(l, r, base)) continue;
        if (f >= 1.0) {
          count += r.end - r.begin;
        } else {
          for (uint64_t s = r.begin; s < r.end; ++s)
            if (mix64(prefix, s) < cut) ++count;
        }
      }
      (kind == OpKind::MUL ? pm : pa) += count;
    }
  }
  *protected_mul = pm;
  *protected_add = pa;
}

namespace {

ProtectionSet protection_from_fractions(const Model& exec_model,
                                        const std::map<uint32_t, double>& layer_fraction,
                                        uint64_t selection_seed, const FaultConfig& base) {
  ProtectionSet p;
  p.selection_seed = selection_seed;
  for (const auto& [id, fl] : layer_fraction) {
    if (fl <= 0.0) continue;
    auto f = split_mul_first(fl, fault_prone_sites(exec_model, id, OpKind::MUL, base),
                             fault_prone_sites(exec_model, id, OpKind::ADD, base));
    p.layer_fractions[id] = f;
  }
  return p;
}

struct TrajectoryStep {
  std::map<uint32_t, double> layer_fraction;
  AccuracyResult acc;
};

struct Trajectory {
  std::vector<uint32_t> layer_ids;
  std::vector<double> vfs;
  AccuracyResult unprotected;
  std::vector<TrajectoryStep> steps;
};

// Walks the protection schedule until `stop_goal` is met or everything is
// protected. Layer picking uses priority = VF * (1 - protected fraction)
// (static VF with a dynamic discount), so the schedule itself is a pure
// function of the VF estimates and delta; accuracy controls only stopping.
Trajectory run_trajectory(const Model& exec_model, const Dataset& dataset, double ber,
                          const std::vector<uint32_t>& layer_ids, const std::vector<double>& vfs,
                          double stop_goal, double delta, int trials, uint64_t eval_seed,
                          uint64_t selection_seed, int workers, const FaultConfig& base) {
  Trajectory traj;
  traj.layer_ids = layer_ids;
  traj.vfs = vfs;
  FaultConfig cfg = base;
  cfg.mode = FaultMode::OP_LEVEL;
  cfg.ber = ber;
  cfg.seed = eval_seed;
  traj.unprotected = evaluate_accuracy(exec_model, dataset, cfg, trials, workers);
  if (traj.unprotected.accuracy >= stop_goal) return traj;

  std::map<uint32_t, double> frac;
  for (uint32_t id : layer_ids) frac[id] = 0.0;
  for (;;) {
    int best = -1;
    double best_priority = -1e300;
    for (size_t i = 0; i < layer_ids.size(); ++i) {
      double fl = frac[layer_ids[i]];
      if (fl >= 1.0) continue;
      double priority = vfs[i] * (1.0 - fl);
      if (priority > best_priority) {
        best_priority = priority;
        best = static_cast<int>(i);
      }
    }
    if (best < 0) return traj;  // everything protected
    uint32_t id = layer_ids[best];
    frac[id] = std::min(1.0, frac[id] + delta);

    FaultConfig step_cfg = cfg;
    step_cfg.protection = protection_from_fractions(exec_model, frac, selection_seed, base);
    TrajectoryStep step;
    step.layer_fraction = frac;
    step.acc = evaluate_accuracy(exec_model, dataset, step_cfg, trials, workers);
    traj.steps.push_back(std::move(step));
    if (traj.steps.back().acc.accuracy >= stop_goal) return traj;
  }
}

TmrPlan plan_from_state(const Model& exec_model, TmrMode mode, double ber, double goal,
                        const std::map<uint32_t, double>& layer_fraction,
                        const AccuracyResult& achieved, uint64_t selection_seed,
                        const CostModel& cost, int iterations, const FaultConfig& base) {
  TmrPlan plan;
  plan.mode = mode;
  plan.ber = ber;
  plan.goal = goal;
  plan.layer_fraction = layer_fraction;
  plan.protection = protection_from_fractions(exec_model, layer_fraction, selection_seed, base);
  plan.achieved = achieved;
  plan.iterations = iterations;
  count_protected_sites(exec_model, plan.protection, base, &plan.protected_mul,
                        &plan.protected_add);
  plan.overhead_mul_ops = 2 * plan.protected_mul;
  plan.overhead_add_ops = 2 * plan.protected_add;
  plan.overhead_weighted = static_cast<double>(plan.overhead_mul_ops) * cost.cost_mul +
                           static_cast<double>(plan.overhead_add_ops) * cost.cost_add;
  return plan;
}

// Earliest trajectory state meeting `goal`; -1 = unprotected state.
int stop_index(const Trajectory& traj, double goal) {
  if (traj.unprotected.accuracy >= goal) return -1;
  for (size_t i = 0; i < traj.steps.size(); ++i)
    if (traj.steps[i].acc.accuracy >= goal) return static_cast<int>(i);
  return -2;  // not reached
}

TmrPlan plan_at_goal(const Model& exec_model, TmrMode mode, double ber, double goal,
                     const Trajectory& traj, uint64_t selection_seed, const CostModel& cost,
                     const FaultConfig& base) {
  int idx = stop_index(traj, goal);
  if (idx == -2)
    raise(ErrorCode::GOAL_UNREACHABLE,
          std::string(to_string(mode)) + ": fully protected accuracy still misses the goal");
  if (idx == -1)
    return plan_from_state(exec_model, mode, ber, goal, {}, traj.unprotected, selection_seed,
                           cost, 0, base);
  return plan_from_state(exec_model, mode, ber, goal, traj.steps[idx].layer_fraction,
                         traj.steps[idx].acc, selection_seed, cost, idx + 1, base);
}

std::vector<double> vf_values(const LayerVulnReport& rep, const std::vector<uint32_t>& ids) {
  std::vector<double> vfs;
  vfs.reserve(ids.size());
  for (uint32_t id : ids) {
    for (const auto& l : rep.layers)
      if (l.layer_id == id) {
        vfs.push_back(l.vf);
        break;
      }
  }
  return vfs;
}

}  // namespace

TmrPlan plan_tmr(const Model& model, const Dataset& dataset, TmrMode mode, double ber,
                 double goal, double delta, int trials, const CostModel& cost,
                 uint64_t seed, int workers, const FaultConfig& base) {
  if (delta <= 0.0 || delta > 1.0)
    raise(ErrorCode::CONFIG_INVALID, "plan_tmr: delta must be in (0, 1]");
  uint64_t selection_seed = derive_seed(seed, "tmr-selection");
  uint64_t eval_seed = derive_seed(seed, "tmr-eval");
  if (mode == TmrMode::WG_WO_AFT) {
    // Copy the ST_CONV plan's fractions onto the winograd engine and run it
    // there; stopping is not re-evaluated.
    TmrPlan st = plan_tmr(model, dataset, TmrMode::ST_CONV, ber, goal, delta, trials, cost,
                          seed, workers, base);
    Model wg = model.with_engines(ConvEngine::WINOGRAD);
    FaultConfig cfg = base;
    cfg.mode = FaultMode::OP_LEVEL;
    cfg.ber = ber;
    cfg.seed = eval_seed;
    cfg.protection = protection_from_fractions(wg, st.layer_fraction, selection_seed, base);
    AccuracyResult achieved = evaluate_accuracy(wg, dataset, cfg, trials, workers);
    return plan_from_state(wg, mode, ber, goal, st.layer_fraction, achieved, selection_seed,
                           cost, st.iterations, base);
  }
  Model exec_model = model.with_engines(tmr_exec_engine(mode));
  LayerVulnReport vf_rep = layer_vulnerability(model, dataset, ber, tmr_vf_engine(mode), trials,
                                               derive_seed(seed, "tmr-vf"), workers, base);
  std::vector<uint32_t> ids = model.weighted_layer_ids();
  Trajectory traj = run_trajectory(exec_model, dataset, ber, ids, vf_values(vf_rep, ids), goal,
                                   delta, trials, eval_seed, selection_seed, workers, base);
  return plan_at_goal(exec_model, mode, ber, goal, traj, selection_seed, cost, base);
}

double overhead_ratio(const TmrPlan& plan, const TmrPlan& reference) {
  if (reference.overhead_weighted == 0.0) {
    if (plan.overhead_weighted == 0.0) return 1.0;
    raise(ErrorCode::OUT_OF_RANGE, "overhead_ratio: reference overhead is zero");
  }
  return plan.overhead_weighted / reference.overhead_weighted;
}

double overhead_ratio_raw(const TmrPlan& plan, const TmrPlan& reference) {
  uint64_t p = plan.overhead_mul_ops + plan.overhead_add_ops;
  uint64_t r = reference.overhead_mul_ops + reference.overhead_add_ops;
  if (r == 0) {
    if (p == 0) return 1.0;
    raise(ErrorCode::OUT_OF_RANGE, "overhead_ratio_raw: reference overhead is zero");
  }
  return static_cast<double>(p) / static_cast<double>(r);
}

const TmrComparisonCell* TmrComparison::find(TmrMode mode, double goal_frac) const {
  for (const auto& c : cells)
    if (c.mode == mode && c.goal_frac == goal_frac) return &c;
  return nullptr;
}

TmrComparison compare_modes(const Model& model, const Dataset& dataset, double ber,
                            const std::vector<double>& goal_fracs, double delta, int trials,
                            const CostModel& cost, uint64_t seed, int workers,
                            const FaultConfig& base) {
  if (goal_fracs.empty()) raise(ErrorCode::CONFIG_INVALID, "compare_modes: empty goal grid");
  TmrComparison cmp;
  cmp.ber = ber;
  cmp.goal_fracs = goal_fracs;
  FaultConfig none;
  cmp.fault_free_accuracy =
      evaluate_accuracy(model.with_engines(ConvEngine::DIRECT), dataset, none, 1, workers).accuracy;
  double max_goal = *std::max_element(goal_fracs.begin(), goal_fracs.end()) *
                    cmp.fault_free_accuracy;

  uint64_t selection_seed = derive_seed(seed, "tmr-selection");
  uint64_t eval_seed = derive_seed(seed, "tmr-eval");
  std::vector<uint32_t> ids = model.weighted_layer_ids();

  // One trajectory per iterating mode; per-goal plans are its prefixes.
  std::map<TmrMode, Trajectory> trajs;
  for (TmrMode mode : {TmrMode::ST_CONV, TmrMode::WG_W_AFT}) {
    Model exec_model = model.with_engines(tmr_exec_engine(mode));
    LayerVulnReport vf_rep = layer_vulnerability(model, dataset, ber, tmr_vf_engine(mode),
                                                 trials, derive_seed(seed, "tmr-vf"), workers,
                                                 base);
    trajs[mode] = run_trajectory(exec_model, dataset, ber, ids, vf_values(vf_rep, ids), max_goal,
                                 delta, trials, eval_seed, selection_seed, workers, base);
  }

  Model st_model = model.with_engines(ConvEngine::DIRECT);
  Model wg_model = model.with_engines(ConvEngine::WINOGRAD);
  for (double gf : goal_fracs) {
    double goal = gf * cmp.fault_free_accuracy;
    TmrPlan st = plan_at_goal(st_model, TmrMode::ST_CONV, ber, goal, trajs[TmrMode::ST_CONV],
                              selection_seed, cost, base);
    TmrPlan waft = plan_at_goal(wg_model, TmrMode::WG_W_AFT, ber, goal,
                                trajs[TmrMode::WG_W_AFT], selection_seed, cost, base);
    FaultConfig cfg = base;
    cfg.mode = FaultMode::OP_LEVEL;
    cfg.ber = ber;
    cfg.seed = eval_seed;
    cfg.protection = protection_from_fractions(wg_model, st.layer_fraction, selection_seed, base);
    AccuracyResult wo_acc = evaluate_accuracy(wg_model, dataset, cfg, trials, workers);
    TmrPlan wo = plan_from_state(wg_model, TmrMode::WG_WO_AFT, ber, goal, st.layer_fraction,
                                 wo_acc, selection_seed, cost, st.iterations, base);
    for (const TmrPlan* plan : {&st, &wo, &waft}) {
      TmrComparisonCell cell;
      cell.mode = plan->mode;
      cell.goal_frac = gf;
      cell.normalized = overhead_ratio(*plan, st);
      cell.normalized_raw = overhead_ratio_raw(*plan, st);
      cell.plan = *plan;
      cmp.cells.push_back(std::move(cell));
    }
  }
  return cmp;
}

}  // namespace winofi
