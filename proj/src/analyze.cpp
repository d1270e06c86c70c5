#include "winofi/analyze.hpp"

#include <algorithm>
#include <cmath>

#include "winofi/rng.hpp"

namespace winofi {

const char* to_string(FaultMode m) {
  switch (m) {
    case FaultMode::NONE: return "none";
    case FaultMode::OP_LEVEL: return "op_level";
    case FaultMode::NEURON_LEVEL: return "neuron_level";
  }
  return "?";
}

void SweepSpec::validate() const {
  if (ber_grid.empty()) raise(ErrorCode::CONFIG_INVALID, "sweep: empty ber grid");
  if (!std::is_sorted(ber_grid.begin(), ber_grid.end()))
    raise(ErrorCode::CONFIG_INVALID, "sweep: ber grid must be sorted ascending");
  if (engines.empty() || modes.empty())
    raise(ErrorCode::CONFIG_INVALID, "sweep: engines/modes must be non-empty");
  if (trials < 1) raise(ErrorCode::CONFIG_INVALID, "sweep: trials must be >= 1");
}

const SweepPoint* SweepResult::find(ConvEngine e, FaultMode m, double ber) const {
  for (const auto& p : points)
    if (p.engine == e && p.mode == m && p.ber == ber) return &p;
  return nullptr;
}

SweepResult ber_sweep(const Model& model, const Dataset& dataset, const SweepSpec& spec) {
  spec.validate();
  SweepResult out;
  for (ConvEngine engine : spec.engines) {
    Model m = model.with_engines(engine);
    for (FaultMode mode : spec.modes) {
      for (double ber : spec.ber_grid) {
        FaultConfig cfg = spec.base;
        cfg.mode = ber > 0.0 ? mode : FaultMode::NONE;
        cfg.ber = ber;
        cfg.seed = spec.seed;
        out.points.push_back(
            {engine, mode, ber, evaluate_accuracy(m, dataset, cfg, spec.trials, spec.workers)});
      }
    }
  }
  bool both = std::count(spec.engines.begin(), spec.engines.end(), ConvEngine::DIRECT) &&
              std::count(spec.engines.begin(), spec.engines.end(), ConvEngine::WINOGRAD);
  if (both) {
    for (FaultMode mode : spec.modes) {
      for (double ber : spec.ber_grid) {
        const SweepPoint* wg = out.find(ConvEngine::WINOGRAD, mode, ber);
        const SweepPoint* st = out.find(ConvEngine::DIRECT, mode, ber);
        out.improvement.push_back({mode, ber, wg->acc.accuracy - st->acc.accuracy});
      }
    }
  }
  return out;
}

SweepResult fi_mode_compare(const Model& model, const Dataset& dataset, SweepSpec spec) {
  spec.modes = {FaultMode::OP_LEVEL, FaultMode::NEURON_LEVEL};
  spec.engines = {ConvEngine::DIRECT, ConvEngine::WINOGRAD};
  return ber_sweep(model, dataset, spec);
}

LayerVulnReport layer_vulnerability(const Model& model, const Dataset& dataset, double ber,
                                    ConvEngine engine, int trials, uint64_t seed, int workers,
                                    const FaultConfig& base) {
  if (ber <= 0.0) raise(ErrorCode::CONFIG_INVALID, "layer_vulnerability: ber must be > 0");
  LayerVulnReport rep;
  rep.engine = engine;
  rep.ber = ber;
  Model m = model.with_engines(engine);
  FaultConfig cfg = base;
  cfg.mode = FaultMode::OP_LEVEL;
  cfg.ber = ber;
  cfg.seed = seed;
  rep.baseline = evaluate_accuracy(m, dataset, cfg, trials, workers);
  for (uint32_t id : m.weighted_layer_ids()) {
    FaultConfig ex = cfg;
    ex.excluded_layer = id;  // same seed/trial streams: paired design
    LayerVf lv;
    lv.layer_id = id;
    lv.name = m.layers[id].name;
    lv.exempted = evaluate_accuracy(m, dataset, ex, trials, workers);
    lv.vf = lv.exempted.accuracy - rep.baseline.accuracy;
    OpCounts n = m.layer_op_counts(id);
    lv.n_mul = n.mul;
    lv.n_add = n.add;
    rep.layers.push_back(std::move(lv));
  }
  std::vector<double> vf, muls;
  for (const auto& l : rep.layers) {
    vf.push_back(l.vf);
    muls.push_back(static_cast<double>(l.n_mul));
  }
  rep.spearman_vf_vs_mul = spearman(vf, muls);
  return rep;
}

OpTypeReport op_type_vulnerability(const Model& model, const Dataset& dataset, double ber,
                                   ConvEngine engine, int trials, uint64_t seed, int workers,
                                   const FaultConfig& base) {
  OpTypeReport rep;
  rep.engine = engine;
  rep.ber = ber;
  Model m = model.with_engines(engine);
  FaultConfig cfg = base;
  cfg.mode = FaultMode::OP_LEVEL;
  cfg.ber = ber;
  cfg.seed = seed;
  rep.all_faulty = evaluate_accuracy(m, dataset, cfg, trials, workers);
  FaultConfig only_add = cfg;
  only_add.scope_mul = false;
  rep.mul_fault_free = evaluate_accuracy(m, dataset, only_add, trials, workers);
  FaultConfig only_mul = cfg;
  only_mul.scope_add = false;
  rep.add_fault_free = evaluate_accuracy(m, dataset, only_mul, trials, workers);
  rep.sensitivity_mul = rep.mul_fault_free.accuracy - rep.all_faulty.accuracy;
  rep.sensitivity_add = rep.add_fault_free.accuracy - rep.all_faulty.accuracy;
  return rep;
}

double pick_analysis_ber(const Model& model, const Dataset& dataset,
                         const std::vector<double>& grid, int trials, uint64_t seed,
                         int workers, const FaultConfig& base) {
  if (grid.empty()) raise(ErrorCode::CONFIG_INVALID, "pick_analysis_ber: empty grid");
  Model m = model.with_engines(ConvEngine::DIRECT);
  double best_ber = grid.front();
  double best_dist = 2.0;
  for (double ber : grid) {
    if (ber <= 0.0) continue;
    FaultConfig cfg = base;
    cfg.mode = FaultMode::OP_LEVEL;
    cfg.ber = ber;
    cfg.seed = seed;
    AccuracyResult r = evaluate_accuracy(m, dataset, cfg, trials, workers);
    double dist = std::fabs(r.accuracy - 0.5);
    if (dist < best_dist) {
      best_dist = dist;
      best_ber = ber;
    }
  }
  return best_ber;
}

bool ci_overlap(const AccuracyResult& a, const AccuracyResult& b) {
  return a.ci_lo <= b.ci_hi && b.ci_lo <= a.ci_hi;
}

bool ci_separated_above(const AccuracyResult& hi, const AccuracyResult& lo) {
  return hi.ci_lo > lo.ci_hi;
}

}  // namespace winofi
