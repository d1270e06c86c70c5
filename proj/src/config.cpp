#include "winofi/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "winofi/model_io.hpp"
#include "winofi/rng.hpp"

namespace winofi {

using nlohmann::json;

std::vector<double> default_ber_grid() {
  // 0 plus two points per decade over 1e-9 .. 1e-3, as literals so the
  // built-in defaults match configs/default.json bit for bit.
  return {0.0,
          1e-9, 3.1622776601683795e-9,
          1e-8, 3.1622776601683795e-8,
          1e-7, 3.1622776601683795e-7,
          1e-6, 3.1622776601683795e-6,
          1e-5, 3.1622776601683795e-5,
          1e-4, 3.1622776601683795e-4,
          1e-3};
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.sweep.ber_grid = default_ber_grid();
  c.energy.curve_anchors = VoltageBerCurve::default_curve().anchors;
  return c;
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) raise(ErrorCode::CONFIG_INVALID, where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      raise(ErrorCode::CONFIG_INVALID, where + ": unknown key '" + it.key() + "'");
}

template <typename T>
void get_to(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text,
                                                  const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    raise(ErrorCode::CONFIG_INVALID, origin + ": " + e.what());
  }
  ExperimentConfig c = defaults();
  check_keys(j, {"seed", "workers", "out", "format", "model", "dataset", "eval", "sweep",
                 "analysis", "tmr", "energy"},
             origin);
  get_to(j, "seed", c.seed);
  get_to(j, "workers", c.workers);
  get_to(j, "out", c.out_dir);
  get_to(j, "format", c.output_format);
  if (j.contains("model")) {
    const json& m = j["model"];
    check_keys(m, {"source", "path", "seed", "profile", "word_bits", "frac_bits"}, "model");
    get_to(m, "source", c.model.source);
    get_to(m, "path", c.model.path);
    get_to(m, "seed", c.model.seed);
    get_to(m, "profile", c.model.profile);
    get_to(m, "word_bits", c.model.word_bits);
    get_to(m, "frac_bits", c.model.frac_bits);
  }
  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    check_keys(d, {"source", "path", "num_samples", "seed"}, "dataset");
    get_to(d, "source", c.dataset.source);
    get_to(d, "path", c.dataset.path);
    get_to(d, "num_samples", c.dataset.num_samples);
    get_to(d, "seed", c.dataset.seed);
  }
  if (j.contains("eval")) {
    const json& e = j["eval"];
    check_keys(e, {"trials", "include_fc", "winograd_stages"}, "eval");
    get_to(e, "trials", c.eval.trials);
    get_to(e, "include_fc", c.eval.include_fc);
    get_to(e, "winograd_stages", c.eval.winograd_stages);
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    check_keys(s, {"ber_grid", "engines", "modes"}, "sweep");
    get_to(s, "ber_grid", c.sweep.ber_grid);
    get_to(s, "engines", c.sweep.engines);
    get_to(s, "modes", c.sweep.modes);
  }
  if (j.contains("analysis")) {
    const json& a = j["analysis"];
    check_keys(a, {"ber", "trials"}, "analysis");
    get_to(a, "ber", c.analysis.ber);
    get_to(a, "trials", c.analysis.trials);
  }
  if (j.contains("tmr")) {
    const json& t = j["tmr"];
    check_keys(t, {"goals", "delta", "trials", "ber", "cost_mul", "cost_add"}, "tmr");
    get_to(t, "goals", c.tmr.goals);
    get_to(t, "delta", c.tmr.delta);
    get_to(t, "trials", c.tmr.trials);
    get_to(t, "ber", c.tmr.ber);
    get_to(t, "cost_mul", c.tmr.cost_mul);
    get_to(t, "cost_add", c.tmr.cost_add);
  }
  if (j.contains("energy")) {
    const json& e = j["energy"];
    check_keys(e,
               {"budgets", "grid_step", "trials", "curve", "power_p0", "power_v0",
                "throughput_mul", "throughput_add", "layer_overhead_cycles", "clock_hz"},
               "energy");
    get_to(e, "budgets", c.energy.budgets);
    get_to(e, "grid_step", c.energy.grid_step);
    get_to(e, "trials", c.energy.trials);
    if (e.contains("curve")) {
      c.energy.curve_anchors.clear();
      for (const auto& a : e["curve"]) {
        if (!a.is_array() || a.size() != 2)
          raise(ErrorCode::CONFIG_INVALID, "energy.curve: expected [voltage, ber] pairs");
        c.energy.curve_anchors.emplace_back(a[0].get<double>(), a[1].get<double>());
      }
    }
    get_to(e, "power_p0", c.energy.power_p0);
    get_to(e, "power_v0", c.energy.power_v0);
    get_to(e, "throughput_mul", c.energy.throughput_mul);
    get_to(e, "throughput_add", c.energy.throughput_add);
    get_to(e, "layer_overhead_cycles", c.energy.layer_overhead_cycles);
    get_to(e, "clock_hz", c.energy.clock_hz);
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) raise(ErrorCode::CONFIG_NOT_FOUND, "config file not found: " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return from_json_text(text, path);
}

void ExperimentConfig::validate() const {
  if (output_format != "csv" && output_format != "json")
    raise(ErrorCode::CONFIG_INVALID, "format must be csv or json");
  if (model.source != "synthetic" && model.source != "file")
    raise(ErrorCode::CONFIG_INVALID, "model.source must be synthetic or file");
  if (model.source == "file" && model.path.empty())
    raise(ErrorCode::CONFIG_INVALID, "model.path required for file source");
  if (!fxp_format().valid()) raise(ErrorCode::CONFIG_INVALID, "invalid word/frac bits");
  if (dataset.source != "self_labeled" && dataset.source != "file")
    raise(ErrorCode::CONFIG_INVALID, "dataset.source must be self_labeled or file");
  if (dataset.source == "self_labeled" && dataset.num_samples < 1)
    raise(ErrorCode::CONFIG_INVALID, "dataset.num_samples must be >= 1");
  if (eval.trials < 1 || analysis.trials < 1 || tmr.trials < 1 || energy.trials < 1)
    raise(ErrorCode::CONFIG_INVALID, "trials must be >= 1");
  for (const std::string& s : eval.winograd_stages)
    if (s != "filter" && s != "input" && s != "elementwise" && s != "output")
      raise(ErrorCode::CONFIG_INVALID, "unknown winograd stage: " + s);
  sweep_engines();
  sweep_modes();
  if (sweep.ber_grid.empty() || !std::is_sorted(sweep.ber_grid.begin(), sweep.ber_grid.end()))
    raise(ErrorCode::CONFIG_INVALID, "sweep.ber_grid must be non-empty and ascending");
  if (tmr.delta <= 0.0 || tmr.delta > 1.0)
    raise(ErrorCode::CONFIG_INVALID, "tmr.delta must be in (0,1]");
  if (tmr.cost_mul <= 0.0 || tmr.cost_add <= 0.0)
    raise(ErrorCode::CONFIG_INVALID, "tmr costs must be > 0");
  for (double g : tmr.goals)
    if (g <= 0.0 || g > 1.0) raise(ErrorCode::CONFIG_INVALID, "tmr.goals must be in (0,1]");
  for (double b : energy.budgets)
    if (b <= 0.0 || b > 1.0) raise(ErrorCode::CONFIG_INVALID, "energy.budgets must be in (0,1]");
  voltage_curve().validate();
  if (energy.grid_step <= 0.0) raise(ErrorCode::CONFIG_INVALID, "energy.grid_step must be > 0");
}

FxpFormat ExperimentConfig::fxp_format() const { return {model.word_bits, model.frac_bits}; }

uint32_t ExperimentConfig::wg_stage_mask() const {
  if (eval.winograd_stages.empty()) return kAllStages;
  uint32_t mask = stage_bit(WgStage::MAIN);
  for (const std::string& s : eval.winograd_stages) {
    if (s == "filter") mask |= stage_bit(WgStage::FILTER);
    if (s == "input") mask |= stage_bit(WgStage::INPUT);
    if (s == "elementwise") mask |= stage_bit(WgStage::ELEMENTWISE);
    if (s == "output") mask |= stage_bit(WgStage::OUTPUT);
  }
  return mask;
}

FaultConfig ExperimentConfig::base_fault_config() const {
  FaultConfig cfg;
  cfg.include_fc = eval.include_fc;
  cfg.wg_stage_mask = wg_stage_mask();
  return cfg;
}

std::vector<ConvEngine> ExperimentConfig::sweep_engines() const {
  std::vector<ConvEngine> out;
  for (const std::string& e : sweep.engines) {
    if (e == "direct")
      out.push_back(ConvEngine::DIRECT);
    else if (e == "winograd")
      out.push_back(ConvEngine::WINOGRAD);
    else
      raise(ErrorCode::CONFIG_INVALID, "unknown engine: " + e);
  }
  return out;
}

std::vector<FaultMode> ExperimentConfig::sweep_modes() const {
  std::vector<FaultMode> out;
  for (const std::string& m : sweep.modes) {
    if (m == "op_level")
      out.push_back(FaultMode::OP_LEVEL);
    else if (m == "neuron_level")
      out.push_back(FaultMode::NEURON_LEVEL);
    else
      raise(ErrorCode::CONFIG_INVALID, "unknown mode: " + m);
  }
  return out;
}

VoltageBerCurve ExperimentConfig::voltage_curve() const {
  VoltageBerCurve c;
  c.anchors = energy.curve_anchors.empty() ? VoltageBerCurve::default_curve().anchors
                                           : energy.curve_anchors;
  return c;
}

PowerModel ExperimentConfig::power_model() const { return {energy.power_p0, energy.power_v0}; }

RuntimeModel ExperimentConfig::runtime_model() const {
  return {energy.throughput_mul, energy.throughput_add, energy.layer_overhead_cycles,
          energy.clock_hz};
}

CostModel ExperimentConfig::cost_model() const { return {tmr.cost_mul, tmr.cost_add}; }

std::string ExperimentConfig::canonical_json() const {
  json j;
  j["seed"] = seed;
  j["format"] = output_format;
  j["model"] = {{"source", model.source}, {"path", model.path},     {"seed", model.seed},
                {"profile", model.profile}, {"word_bits", model.word_bits},
                {"frac_bits", model.frac_bits}};
  j["dataset"] = {{"source", dataset.source},
                  {"path", dataset.path},
                  {"num_samples", dataset.num_samples},
                  {"seed", dataset.seed}};
  j["eval"] = {{"trials", eval.trials},
               {"include_fc", eval.include_fc},
               {"winograd_stages", eval.winograd_stages}};
  j["sweep"] = {{"ber_grid", sweep.ber_grid}, {"engines", sweep.engines}, {"modes", sweep.modes}};
  j["analysis"] = {{"ber", analysis.ber}, {"trials", analysis.trials}};
  j["tmr"] = {{"goals", tmr.goals}, {"delta", tmr.delta},       {"trials", tmr.trials},
              {"ber", tmr.ber},     {"cost_mul", tmr.cost_mul}, {"cost_add", tmr.cost_add}};
  json curve = json::array();
  for (auto& [v, b] : energy.curve_anchors) curve.push_back({v, b});
  j["energy"] = {{"budgets", energy.budgets},
                 {"grid_step", energy.grid_step},
                 {"trials", energy.trials},
                 {"curve", curve},
                 {"power_p0", energy.power_p0},
                 {"power_v0", energy.power_v0},
                 {"throughput_mul", energy.throughput_mul},
                 {"throughput_add", energy.throughput_add},
                 {"layer_overhead_cycles", energy.layer_overhead_cycles},
                 {"clock_hz", energy.clock_hz}};
  // workers and out are execution details, not part of the result identity
  return j.dump();
}

uint64_t ExperimentConfig::config_hash() const {
  std::string s = canonical_json();
  uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

Model ExperimentConfig::build_model() const {
  if (model.source == "file") return load_model(model.path);
  return generate_synthetic_model(model.seed, model.profile, fxp_format());
}

Dataset ExperimentConfig::build_dataset(const Model& m, int workers_resolved) const {
  if (dataset.source == "file") return load_dataset(dataset.path);
  Dataset d = generate_inputs(m, dataset.num_samples, dataset.seed);
  self_label(m, d, workers_resolved);
  return d;
}

}  // namespace winofi
