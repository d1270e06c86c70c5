// winofi command line: one subcommand per analysis, CSV/JSON outputs plus a
// run manifest. Every data file is reproducible from (config, seed) alone.

#include <chrono>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "winofi/analyze.hpp"
#include "winofi/config.hpp"
#include "winofi/energy.hpp"
#include "winofi/model_io.hpp"
#include "winofi/parallel.hpp"
#include "winofi/report.hpp"
#include "winofi/rng.hpp"
#include "winofi/tmr.hpp"

namespace {

using namespace winofi;
using nlohmann::json;

struct CommonOpts {
  std::optional<std::string> config_path;
  std::optional<uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config file (JSON)");
  cmd->add_option("--seed", opts.seed, "override the global seed");
  cmd->add_option("--workers", opts.workers, "worker threads (0 = hardware)");
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--format", opts.format, "data file format: csv or json");
}

ExperimentConfig resolve_config(const CommonOpts& opts) {
  ExperimentConfig cfg =
      opts.config_path ? ExperimentConfig::load(*opts.config_path) : ExperimentConfig::defaults();
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.workers) cfg.workers = *opts.workers;
  if (opts.out_dir) cfg.out_dir = *opts.out_dir;
  if (opts.format) cfg.output_format = *opts.format;
  cfg.validate();
  return cfg;
}

struct RunContext {
  ExperimentConfig cfg;
  uint64_t hash = 0;
  int workers = 1;
  Model model;
  Dataset dataset;
  std::vector<std::string> outputs;

  explicit RunContext(ExperimentConfig c, bool need_data = true) : cfg(std::move(c)) {
    hash = cfg.config_hash();
    workers = resolve_workers(cfg.workers);
    model = cfg.build_model();
    if (need_data) dataset = cfg.build_dataset(model, workers);
  }

  std::string write(const DataTable& t) {
    std::string path = t.write(cfg.out_dir, cfg.output_format, hash, cfg.seed);
    // summaries record file names, not paths: outputs stay byte-identical
    // no matter where the run is pointed
    outputs.push_back(path.substr(path.find_last_of('/') + 1));
    return path;
  }

  void write_summary(const std::string& command, json extra) {
    extra["command"] = command;
    extra["schema"] = "winofi." + std::to_string(kOutputSchemaVersion);
    extra["config_hash"] = hex_hash(hash);
    extra["seed"] = cfg.seed;
    extra["outputs"] = outputs;
    ensure_dir(cfg.out_dir);
    std::string path = cfg.out_dir + "/" + command + "_summary.json";
    write_text_file(path, extra.dump(2) + "\n");
  }

  void write_manifest(const std::string& command, double seconds) {
    // The manifest carries wall-clock timings and is the one output that is
    // not byte-reproducible; data files never include host or time values.
    json m;
    m["command"] = command;
    m["config_hash"] = hex_hash(hash);
    m["seed"] = cfg.seed;
    m["workers"] = workers;
    m["versions"] = {{"winofi", "1.0.0"},
                     {"schema", kOutputSchemaVersion},
                     {"model_format", "WFTM.1"},
                     {"dataset_format", "WFTD.1"}};
    m["timings_seconds"] = {{"total", seconds}};
    ensure_dir(cfg.out_dir);
    write_text_file(cfg.out_dir + "/" + command + "_manifest.json", m.dump(2) + "\n");
  }
};

std::vector<std::string> acc_cells(const AccuracyResult& r) {
  return {format_double(r.accuracy), format_double(r.ci_lo), format_double(r.ci_hi),
          format_u64(r.correct), format_u64(r.total)};
}

double resolve_analysis_ber(RunContext& ctx, double requested, const char* tag) {
  if (requested > 0.0) return requested;
  return pick_analysis_ber(ctx.model, ctx.dataset, ctx.cfg.sweep.ber_grid,
                           ctx.cfg.analysis.trials, derive_seed(ctx.cfg.seed, tag), ctx.workers,
                           ctx.cfg.base_fault_config());
}

void emit_sweep_tables(RunContext& ctx, const SweepResult& res, const std::string& base_name) {
  DataTable t(base_name, {"engine", "mode", "ber", "accuracy", "ci_lo", "ci_hi", "correct",
                          "total", "samples", "trials"});
  for (const auto& p : res.points) {
    auto row = std::vector<std::string>{to_string(p.engine), to_string(p.mode),
                                        format_double(p.ber)};
    auto acc = acc_cells(p.acc);
    row.insert(row.end(), acc.begin(), acc.end());
    row.push_back(std::to_string(p.acc.samples));
    row.push_back(std::to_string(p.acc.trials));
    t.add_row(std::move(row));
  }
  ctx.write(t);
  DataTable imp(base_name + "_improvement", {"mode", "ber", "improvement"});
  for (const auto& i : res.improvement)
    imp.add_row({to_string(i.mode), format_double(i.ber), format_double(i.improvement)});
  ctx.write(imp);
}

int cmd_gen(const CommonOpts& opts) {
  RunContext ctx(resolve_config(opts));
  auto t0 = std::chrono::steady_clock::now();
  ensure_dir(ctx.cfg.out_dir);
  std::string model_path = ctx.cfg.out_dir + "/model.wftm";
  std::string data_path = ctx.cfg.out_dir + "/dataset.wftd";
  save_model(ctx.model, model_path);
  save_dataset(ctx.dataset, data_path);
  ctx.outputs = {"model.wftm", "dataset.wftd"};
  json extra;
  extra["model_seed"] = ctx.model.seed;
  extra["profile"] = ctx.cfg.model.profile;
  extra["num_samples"] = ctx.dataset.size();
  ctx.write_summary("gen", extra);
  ctx.write_manifest("gen", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return 0;
}

SweepSpec sweep_spec_from(const RunContext& ctx) {
  SweepSpec spec;
  spec.ber_grid = ctx.cfg.sweep.ber_grid;
  spec.engines = ctx.cfg.sweep_engines();
  spec.modes = ctx.cfg.sweep_modes();
  spec.trials = ctx.cfg.eval.trials;
  spec.seed = derive_seed(ctx.cfg.seed, "sweep");
  spec.workers = ctx.workers;
  spec.base = ctx.cfg.base_fault_config();
  return spec;
}

int cmd_sweep(const CommonOpts& opts) {
  RunContext ctx(resolve_config(opts));
  auto t0 = std::chrono::steady_clock::now();
  SweepResult res = ber_sweep(ctx.model, ctx.dataset, sweep_spec_from(ctx));
  emit_sweep_tables(ctx, res, "ber_sweep");
  json extra;
  extra["grid_points"] = ctx.cfg.sweep.ber_grid.size();
  ctx.write_summary("sweep", extra);
  ctx.write_manifest("sweep", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return 0;
}

int cmd_compare_fi(const CommonOpts& opts) {
  RunContext ctx(resolve_config(opts));
  auto t0 = std::chrono::steady_clock::now();
  SweepResult res = fi_mode_compare(ctx.model, ctx.dataset, sweep_spec_from(ctx));
  emit_sweep_tables(ctx, res, "fi_mode_compare");
  json extra;
  extra["grid_points"] = ctx.cfg.sweep.ber_grid.size();
  ctx.write_summary("compare_fi", extra);
  ctx.write_manifest("compare_fi", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return 0;
}

int cmd_layer_vuln(const CommonOpts& opts) {
  RunContext ctx(resolve_config(opts));
  auto t0 = std::chrono::steady_clock::now();
  double ber = resolve_analysis_ber(ctx, ctx.cfg.analysis.ber, "analysis-ber");
  DataTable t("layer_vulnerability",
              {"engine", "ber", "layer_id", "layer", "vf", "exempt_accuracy", "exempt_ci_lo",
               "exempt_ci_hi", "baseline_accuracy", "baseline_ci_lo", "baseline_ci_hi", "n_mul",
               "n_add"});
  json per_engine;
  for (ConvEngine engine : ctx.cfg.sweep_engines()) {
    LayerVulnReport rep =
        layer_vulnerability(ctx.model, ctx.dataset, ber, engine, ctx.cfg.analysis.trials,
                            derive_seed(ctx.cfg.seed, "layer-vuln"), ctx.workers,
                            ctx.cfg.base_fault_config());
    for (const auto& l : rep.layers)
      t.add_row({to_string(engine), format_double(ber), std::to_string(l.layer_id), l.name,
                 format_double(l.vf), format_double(l.exempted.accuracy),
                 format_double(l.exempted.ci_lo), format_double(l.exempted.ci_hi),
                 format_double(rep.baseline.accuracy), format_double(rep.baseline.ci_lo),
                 format_double(rep.baseline.ci_hi), format_u64(l.n_mul), format_u64(l.n_add)});
    per_engine[to_string(engine)] = {{"spearman_vf_vs_mul", rep.spearman_vf_vs_mul},
                                     {"baseline_accuracy", rep.baseline.accuracy}};
  }
  ctx.write(t);
  json extra;
  extra["analysis_ber"] = ber;
  extra["engines"] = per_engine;
  ctx.write_summary("layer_vuln", extra);
  ctx.write_manifest("layer_vuln", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return 0;
}

int cmd_optype_vuln(const CommonOpts& opts) {
  RunContext ctx(resolve_config(opts));
  auto t0 = std::chrono::steady_clock::now();
  double ber = resolve_analysis_ber(ctx, ctx.cfg.analysis.ber, "analysis-ber");
  DataTable t("op_type_vulnerability",
              {"engine", "ber", "series", "accuracy", "ci_lo", "ci_hi", "sensitivity"});
  for (ConvEngine engine : ctx.cfg.sweep_engines()) {
    OpTypeReport rep =
        op_type_vulnerability(ctx.model, ctx.dataset, ber, engine, ctx.cfg.analysis.trials,
                              derive_seed(ctx.cfg.seed, "optype-vuln"), ctx.workers,
                              ctx.cfg.base_fault_config());
    auto row = [&](const char* series, const AccuracyResult& r, double sens) {
      t.add_row({to_string(engine), format_double(ber), series, format_double(r.accuracy),
                 format_double(r.ci_lo), format_double(r.ci_hi), format_double(sens)});
    };
    row("all_faulty", rep.all_faulty, 0.0);
    row("mul_fault_free", rep.mul_fault_free, rep.sensitivity_mul);
    row("add_fault_free", rep.add_fault_free, rep.sensitivity_add);
  }
  ctx.write(t);
  json extra;
  extra["analysis_ber"] = ber;
  ctx.write_summary("optype_vuln", extra);
  ctx.write_manifest("optype_vuln", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return 0;
}

json plan_to_json(const TmrPlan& plan) {
  json p;
  p["mode"] = to_string(plan.mode);
  p["ber"] = plan.ber;
  p["goal_accuracy"] = plan.goal;
  p["selection_seed"] = plan.protection.selection_seed;
  json fractions = json::object();
  for (const auto& [layer, f] : plan.layer_fraction) fractions[std::to_string(layer)] = f;
  p["layer_fractions"] = fractions;
  json kinds = json::object();
  for (const auto& [layer, f] : plan.protection.layer_fractions)
    kinds[std::to_string(layer)] = {{"mul", f.mul}, {"add", f.add}};
  p["kind_fractions"] = kinds;
  p["achieved_accuracy"] = plan.achieved.accuracy;
  p["achieved_ci"] = {plan.achieved.ci_lo, plan.achieved.ci_hi};
  p["protected_mul_sites"] = plan.protected_mul;
  p["protected_add_sites"] = plan.protected_add;
  p["overhead_mul_ops"] = plan.overhead_mul_ops;
  p["overhead_add_ops"] = plan.overhead_add_ops;
  p["overhead_weighted"] = plan.overhead_weighted;
  p["iterations"] = plan.iterations;
  return p;
}

int cmd_tmr(const CommonOpts& opts) {
  RunContext ctx(resolve_config(opts));
  auto t0 = std::chrono::steady_clock::now();
  double ber = resolve_analysis_ber(ctx, ctx.cfg.tmr.ber, "analysis-ber");
  TmrComparison cmp =
      compare_modes(ctx.model, ctx.dataset, ber, ctx.cfg.tmr.goals, ctx.cfg.tmr.delta,
                    ctx.cfg.tmr.trials, ctx.cfg.cost_model(), derive_seed(ctx.cfg.seed, "tmr"),
                    ctx.workers, ctx.cfg.base_fault_config());
  DataTable t("tmr_overhead",
              {"mode", "goal_frac", "goal_accuracy", "achieved_accuracy", "ci_lo", "ci_hi",
               "overhead_weighted", "overhead_mul_ops", "overhead_add_ops",
               "normalized_overhead", "normalized_raw", "iterations"});
  json plans = json::array();
  for (const auto& c : cmp.cells) {
    t.add_row({to_string(c.mode), format_double(c.goal_frac), format_double(c.plan.goal),
               format_double(c.plan.achieved.accuracy), format_double(c.plan.achieved.ci_lo),
               format_double(c.plan.achieved.ci_hi), format_double(c.plan.overhead_weighted),
               format_u64(c.plan.overhead_mul_ops), format_u64(c.plan.overhead_add_ops),
               format_double(c.normalized), format_double(c.normalized_raw),
               std::to_string(c.plan.iterations)});
    json pj = plan_to_json(c.plan);
    pj["goal_frac"] = c.goal_frac;
    pj["normalized_overhead"] = c.normalized;
    plans.push_back(pj);
  }
  ctx.write(t);
  ensure_dir(ctx.cfg.out_dir);
  json plan_file;
  plan_file["schema"] = "winofi." + std::to_string(kOutputSchemaVersion);
  plan_file["config_hash"] = hex_hash(ctx.hash);
  plan_file["seed"] = ctx.cfg.seed;
  plan_file["analysis_ber"] = ber;
  plan_file["fault_free_accuracy"] = cmp.fault_free_accuracy;
  plan_file["plans"] = plans;
  std::string plan_path = ctx.cfg.out_dir + "/tmr_plans.json";
  write_text_file(plan_path, plan_file.dump(2) + "\n");
  ctx.outputs.push_back("tmr_plans.json");
  json extra;
  extra["analysis_ber"] = ber;
  extra["fault_free_accuracy"] = cmp.fault_free_accuracy;
  ctx.write_summary("tmr", extra);
  ctx.write_manifest("tmr", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return 0;
}

int cmd_energy(const CommonOpts& opts) {
  RunContext ctx(resolve_config(opts));
  auto t0 = std::chrono::steady_clock::now();
  EnergyReport rep = energy_report(
      ctx.model, ctx.dataset, {TmrMode::ST_CONV, TmrMode::WG_WO_AFT, TmrMode::WG_W_AFT},
      ctx.cfg.energy.budgets, ctx.cfg.voltage_curve(), ctx.cfg.power_model(),
      ctx.cfg.runtime_model(), ctx.cfg.energy.grid_step, ctx.cfg.energy.trials,
      derive_seed(ctx.cfg.seed, "energy"), ctx.workers, ctx.cfg.base_fault_config());
  DataTable t("energy_report", {"mode", "budget", "feasible", "voltage", "ber", "accuracy",
                                "ci_lo", "ci_hi", "power", "runtime_s", "energy", "normalized"});
  for (const auto& c : rep.cells)
    t.add_row({to_string(c.mode), format_double(c.budget), c.feasible ? "1" : "0",
               format_double(c.pick.voltage), format_double(c.pick.ber),
               format_double(c.pick.acc.accuracy), format_double(c.pick.acc.ci_lo),
               format_double(c.pick.acc.ci_hi), format_double(c.power),
               format_double(c.runtime), format_double(c.energy), format_double(c.normalized)});
  ctx.write(t);
  DataTable v("energy_voltage_accuracy",
              {"engine", "voltage", "ber", "accuracy", "ci_lo", "ci_hi"});
  auto emit_table = [&](const char* engine, const std::vector<VoltageAccuracy>& table) {
    for (const auto& cell : table)
      v.add_row({engine, format_double(cell.voltage), format_double(cell.ber),
                 format_double(cell.acc.accuracy), format_double(cell.acc.ci_lo),
                 format_double(cell.acc.ci_hi)});
  };
  emit_table("direct", rep.direct_table);
  emit_table("winograd", rep.winograd_table);
  ctx.write(v);
  json extra;
  extra["baseline"] = {{"voltage", rep.baseline_voltage},
                       {"power", rep.baseline_power},
                       {"runtime_s", rep.baseline_runtime},
                       {"energy", rep.baseline_energy}};
  extra["fault_free_accuracy"] = rep.fault_free_accuracy;
  ctx.write_summary("energy", extra);
  ctx.write_manifest("energy", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"winofi: winograd convolution fault-tolerance simulator"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* desc;
    int (*run)(const CommonOpts&);
  };
  static const Sub subs[] = {
      {"gen", "generate a synthetic model (WFTM) and self-labeled dataset (WFTD)", cmd_gen},
      {"sweep", "accuracy vs bit error rate per engine", cmd_sweep},
      {"compare-fi", "neuron-level vs operation-level injection comparison", cmd_compare_fi},
      {"layer-vuln", "per-layer vulnerability factors", cmd_layer_vuln},
      {"optype-vuln", "multiplication vs addition sensitivity", cmd_optype_vuln},
      {"tmr", "fine-grained TMR planning and overhead comparison", cmd_tmr},
      {"energy", "voltage scaling and normalized energy report", cmd_energy},
  };

  std::vector<CommonOpts> opts(std::size(subs));
  int rc = 0;
  for (size_t i = 0; i < std::size(subs); ++i) {
    CLI::App* cmd = app.add_subcommand(subs[i].name, subs[i].desc);
    add_common(cmd, opts[i]);
    cmd->callback([&, i] { rc = subs[i].run(opts[i]); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const winofi::Error& e) {
    nlohmann::json err{{"error", winofi::to_string(e.code())}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", "INTERNAL"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return rc;
}
