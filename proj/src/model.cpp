#include "winofi/model.hpp"

#include <algorithm>
#include <cmath>

#include "winofi/parallel.hpp"
#include "winofi/rng.hpp"

namespace winofi {

const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::CONV: return "conv";
    case LayerKind::FC: return "fc";
    case LayerKind::RELU: return "relu";
    case LayerKind::MAXPOOL2: return "maxpool2";
    case LayerKind::FLATTEN: return "flatten";
  }
  return "?";
}

int Model::num_classes() const {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it)
    if (it->kind == LayerKind::FC) return it->fc_out;
  return 0;
}

std::vector<uint32_t> Model::weighted_layer_ids() const {
  std::vector<uint32_t> ids;
  for (uint32_t i = 0; i < layers.size(); ++i)
    if (layers[i].weighted()) ids.push_back(i);
  return ids;
}

OpCounts Model::layer_op_counts(uint32_t layer_id) const {
  const LayerSpec& l = layers.at(layer_id);
  if (l.kind == LayerKind::CONV) return count_conv_ops(l.conv, l.engine);
  if (l.kind == LayerKind::FC) return count_fc_ops(l.fc_in, l.fc_out);
  return {};
}

OpCounts Model::total_op_counts() const {
  OpCounts n;
  for (uint32_t i = 0; i < layers.size(); ++i) n.add_counts(layer_op_counts(i));
  return n;
}

uint64_t Model::layer_sites(uint32_t layer_id, OpKind kind) const {
  OpCounts n = layer_op_counts(layer_id);
  return kind == OpKind::MUL ? n.mul : n.add;
}

void Model::set_conv_engines(ConvEngine engine) {
  for (auto& l : layers)
    if (l.kind == LayerKind::CONV) l.engine = engine;
}

Model Model::with_engines(ConvEngine engine) const {
  Model m = *this;
  m.set_conv_engines(engine);
  return m;
}

void Model::validate() const {
  if (!format.valid()) raise(ErrorCode::SHAPE_MISMATCH, "model: invalid fixed-point format");
  if (!datapath.valid()) raise(ErrorCode::SHAPE_MISMATCH, "model: invalid datapath spec");
  if (layers.size() != weights.size())
    raise(ErrorCode::SHAPE_MISMATCH, "model: layer/weight count mismatch");
  int c = in_c, h = in_h, w = in_w;
  bool flat = false;
  int flat_n = 0;
  for (size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    switch (l.kind) {
      case LayerKind::CONV: {
        if (flat) raise(ErrorCode::SHAPE_MISMATCH, l.name + ": conv after flatten");
        if (l.conv.in_channels != c || l.conv.in_h != h || l.conv.in_w != w)
          raise(ErrorCode::SHAPE_MISMATCH, l.name + ": conv input shape mismatch");
        if (l.engine == ConvEngine::WINOGRAD && !l.conv.winograd_eligible())
          raise(ErrorCode::INELIGIBLE_SPEC, l.name + ": winograd on ineligible conv spec");
        std::vector<int> ws{l.conv.out_channels, l.conv.in_channels, l.conv.kernel, l.conv.kernel};
        if (weights[i].shape != ws)
          raise(ErrorCode::SHAPE_MISMATCH, l.name + ": conv weight shape mismatch");
        c = l.conv.out_channels;
        h = l.conv.out_h();
        w = l.conv.out_w();
        break;
      }
      case LayerKind::FC: {
        int n = flat ? flat_n : c * h * w;
        if (l.fc_in != n) raise(ErrorCode::SHAPE_MISMATCH, l.name + ": fc input size mismatch");
        if (weights[i].shape != std::vector<int>{l.fc_out, l.fc_in})
          raise(ErrorCode::SHAPE_MISMATCH, l.name + ": fc weight shape mismatch");
        flat = true;
        flat_n = l.fc_out;
        break;
      }
      case LayerKind::RELU:
        break;
      case LayerKind::MAXPOOL2:
        if (flat) raise(ErrorCode::SHAPE_MISMATCH, l.name + ": pool after flatten");
        h /= 2;
        w /= 2;
        break;
      case LayerKind::FLATTEN:
        flat = true;
        flat_n = c * h * w;
        break;
    }
  }
}

Model generate_synthetic_model(uint64_t seed, const std::string& profile, FxpFormat format) {
  if (profile != "default")
    raise(ErrorCode::CONFIG_INVALID, "unknown model profile: " + profile);
  Model m;
  m.name = "synthetic-" + profile;
  m.seed = seed;
  m.format = format;
  m.datapath = DatapathSpec::for_format(format);
  m.in_c = 1;
  m.in_h = 16;
  m.in_w = 16;

  auto conv = [&](const std::string& name, int cin, int cout, int h, int w) {
    LayerSpec l;
    l.kind = LayerKind::CONV;
    l.name = name;
    l.conv = ConvSpec{cin, cout, 3, 1, 1, h, w};
    return l;
  };
  auto mk = [&](LayerKind kind, const std::string& name) {
    LayerSpec l;
    l.kind = kind;
    l.name = name;
    return l;
  };
  auto fc = [&](const std::string& name, int in, int out) {
    LayerSpec l;
    l.kind = LayerKind::FC;
    l.name = name;
    l.fc_in = in;
    l.fc_out = out;
    return l;
  };

  m.layers = {
      conv("conv1", 1, 8, 16, 16),  mk(LayerKind::RELU, "relu1"), mk(LayerKind::MAXPOOL2, "pool1"),
      conv("conv2", 8, 16, 8, 8),   mk(LayerKind::RELU, "relu2"),
      conv("conv3", 16, 16, 8, 8),  mk(LayerKind::RELU, "relu3"), mk(LayerKind::MAXPOOL2, "pool2"),
      conv("conv4", 16, 32, 4, 4),  mk(LayerKind::RELU, "relu4"), mk(LayerKind::FLATTEN, "flatten"),
      fc("fc1", 32 * 4 * 4, 64),    mk(LayerKind::RELU, "relu5"),
      fc("fc2", 64, 10),
  };

  // He-style scaled uniform so activations occupy the dynamic range without
  // saturating: |w| <= sqrt(3 / fan_in).
  m.weights.resize(m.layers.size());
  for (size_t i = 0; i < m.layers.size(); ++i) {
    const LayerSpec& l = m.layers[i];
    if (!l.weighted()) {
      m.weights[i] = FxpTensor();
      continue;
    }
    std::vector<int> shape;
    int fan_in;
    if (l.kind == LayerKind::CONV) {
      shape = {l.conv.out_channels, l.conv.in_channels, l.conv.kernel, l.conv.kernel};
      fan_in = l.conv.in_channels * l.conv.kernel * l.conv.kernel;
    } else {
      shape = {l.fc_out, l.fc_in};
      fan_in = l.fc_in;
    }
    double bound = std::sqrt(3.0 / fan_in);
    RngStream rng(derive_seed(seed, "weights-" + l.name));
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    std::vector<double> vals(n);
    for (auto& v : vals) v = (2.0 * rng.next_unit() - 1.0) * bound;
    m.weights[i] = quantize(vals, shape, format);
  }
  m.validate();
  return m;
}

Dataset generate_inputs(const Model& model, int num_samples, uint64_t seed) {
  Dataset d;
  d.in_c = model.in_c;
  d.in_h = model.in_h;
  d.in_w = model.in_w;
  d.num_classes = model.num_classes();
  d.format = model.format;
  d.seed = seed;
  d.provenance = Dataset::Provenance::SELF_LABELED;
  d.inputs.reserve(num_samples);
  d.labels.assign(num_samples, -1);
  size_t n = static_cast<size_t>(d.in_c) * d.in_h * d.in_w;
  for (int s = 0; s < num_samples; ++s) {
    RngStream rng(mix64(derive_seed(seed, "inputs"), static_cast<uint64_t>(s)));
    std::vector<double> vals(n);
    for (auto& v : vals) v = 2.0 * rng.next_unit() - 1.0;
    d.inputs.push_back(quantize(vals, {d.in_c, d.in_h, d.in_w}, model.format));
  }
  return d;
}

namespace {

FxpTensor relu(FxpTensor t) {
  for (auto& v : t.data) v = std::max(v, int32_t{0});
  return t;
}

FxpTensor maxpool2(const FxpTensor& t) {
  int c = t.shape[0], h = t.shape[1], w = t.shape[2];
  FxpTensor out({c, h / 2, w / 2}, t.format);
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h / 2; ++y)
      for (int x = 0; x < w / 2; ++x) {
        int32_t m = t.data[(static_cast<size_t>(ch) * h + 2 * y) * w + 2 * x];
        m = std::max(m, t.data[(static_cast<size_t>(ch) * h + 2 * y) * w + 2 * x + 1]);
        m = std::max(m, t.data[(static_cast<size_t>(ch) * h + 2 * y + 1) * w + 2 * x]);
        m = std::max(m, t.data[(static_cast<size_t>(ch) * h + 2 * y + 1) * w + 2 * x + 1]);
        out.data[(static_cast<size_t>(ch) * (h / 2) + y) * (w / 2) + x] = m;
      }
  return out;
}

FxpTensor flatten(FxpTensor t) {
  t.shape = {static_cast<int>(t.numel())};
  return t;
}

template <typename Hook>
std::vector<FxpTensor> forward(const Model& model, const FxpTensor& input,
                               const FaultConfig& cfg, Hook& hook, InjectionStats* stats,
                               bool keep_trace) {
  uint64_t saturations = 0;
  std::vector<FxpTensor> trace;
  FxpTensor cur = input;
  for (uint32_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    switch (l.kind) {
      case LayerKind::CONV:
        cur = l.engine == ConvEngine::WINOGRAD
                  ? winograd_conv(cur, model.weights[i], l.conv, model.datapath, i, hook, &saturations)
                  : direct_conv(cur, model.weights[i], l.conv, model.datapath, i, hook, &saturations);
        break;
      case LayerKind::FC:
        cur = fc_layer(cur, model.weights[i], i, model.datapath, hook, &saturations);
        break;
      case LayerKind::RELU:
        cur = relu(std::move(cur));
        break;
      case LayerKind::MAXPOOL2:
        cur = maxpool2(cur);
        break;
      case LayerKind::FLATTEN:
        cur = flatten(std::move(cur));
        break;
    }
    if (cfg.mode == FaultMode::NEURON_LEVEL) {
      bool site_layer = l.weighted() ? (l.kind != LayerKind::FC || cfg.include_fc)
                                     : cfg.include_nonweighted;
      if (site_layer) inject_neurons(cur, i, cfg, stats);
    }
    if (keep_trace) trace.push_back(cur);
  }
  if (stats) stats->saturations += saturations;
  if (!keep_trace) trace.push_back(std::move(cur));
  return trace;
}

std::vector<FxpTensor> run_forward(const Model& model, const FxpTensor& input,
                                   const FaultConfig& cfg, InjectionStats* stats,
                                   bool keep_trace) {
  if (input.shape != std::vector<int>{model.in_c, model.in_h, model.in_w})
    raise(ErrorCode::SHAPE_MISMATCH, "infer: input shape does not match model");
  if (cfg.mode == FaultMode::OP_LEVEL && cfg.ber > 0.0) {
    FaultHook hook(cfg, model.datapath);
    auto out = forward(model, input, cfg, hook, stats, keep_trace);
    if (stats) stats->add(hook.stats);
    return out;
  }
  IdentityHook hook;
  return forward(model, input, cfg, hook, stats, keep_trace);
}

}  // namespace

FxpTensor infer(const Model& model, const FxpTensor& input, const FaultConfig& cfg,
                InjectionStats* stats) {
  return run_forward(model, input, cfg, stats, false).back();
}

std::vector<FxpTensor> infer_trace(const Model& model, const FxpTensor& input,
                                   const FaultConfig& cfg, InjectionStats* stats) {
  return run_forward(model, input, cfg, stats, true);
}

namespace {
int argmax_class(const FxpTensor& logits) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(logits.numel()); ++i)
    if (logits.data[i] > logits.data[best]) best = i;
  return best;
}
}  // namespace

void self_label(const Model& model, Dataset& dataset, int workers) {
  Model direct = model.with_engines(ConvEngine::DIRECT);
  FaultConfig none;
  parallel_for(dataset.inputs.size(), workers, [&](size_t i) {
    dataset.labels[i] = argmax_class(infer(direct, dataset.inputs[i], none));
  });
  dataset.provenance = Dataset::Provenance::SELF_LABELED;
}

AccuracyResult evaluate_accuracy(const Model& model, const Dataset& dataset,
                                 const FaultConfig& cfg_template, int trials, int workers) {
  const size_t n_samples = dataset.size();
  const size_t cells = n_samples * static_cast<size_t>(trials);
  std::vector<uint8_t> correct(cells, 0);
  std::vector<InjectionStats> cell_stats(cells);
  parallel_for(cells, workers, [&](size_t cell) {
    size_t sample = cell % n_samples;
    FaultConfig cfg = cfg_template;
    cfg.trial_id = cell;  // trial * num_samples + sample
    FxpTensor logits = infer(model, dataset.inputs[sample], cfg, &cell_stats[cell]);
    correct[cell] = argmax_class(logits) == dataset.labels[sample] ? 1 : 0;
  });
  AccuracyResult r;
  r.samples = static_cast<int>(n_samples);
  r.trials = trials;
  r.seed = cfg_template.seed;
  r.total = cells;
  for (size_t i = 0; i < cells; ++i) {
    r.correct += correct[i];
    r.stats.add(cell_stats[i]);
  }
  r.accuracy = cells ? static_cast<double>(r.correct) / static_cast<double>(cells) : 0.0;
  Interval ci = wilson_ci(r.correct, r.total);
  r.ci_lo = ci.lo;
  r.ci_hi = ci.hi;
  return r;
}

void Dataset::validate() const {
  if (inputs.size() != labels.size())
    raise(ErrorCode::SHAPE_MISMATCH, "dataset: input/label count mismatch");
  for (int32_t l : labels)
    if (l < -1 || l >= num_classes)
      raise(ErrorCode::SHAPE_MISMATCH, "dataset: label out of range");
}

}  // namespace winofi
