#ifndef HOLOQ_MODEL_HPP_
#define HOLOQ_MODEL_HPP_

// FP32 and INT8 execution of the refined hologram network.
//
// One graph walker (`run_graph`) drives three interpreters:
//   - Fp32Ops:       the floating-point reference,
//   - IntegerOps:    the INT8 pipeline (qconv2d, integer residual add and
//                    concat), parameterised by how each activation site gets
//                    its quantization parameters (stored, dynamic, or
//                    calibrating),
//   - FakeQuantOps:  a double-precision simulation of the INT8 pipeline built
//                    from dequantize/conv2d/fake_quantize. The INT8 pipeline
//                    must match it code for code.
//
// Calibration runs the INT8 pipeline over the calibration batch one site at a
// time: each site's range is the envelope over the batch of the values the
// INT8 pipeline itself produces there. Dynamic quantization does the same on
// the single inference input, so calibrating on exactly that input gives the
// same parameters and bit-identical outputs.

#include <holoq/arch.hpp>
#include <holoq/error.hpp>
#include <holoq/quant.hpp>
#include <holoq/random.hpp>
#include <holoq/tensor.hpp>
#include <holoq/weight_store.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace holoq {

struct ConvLayer {
  LayerSpec spec;
  Tensor<float> weight;
  std::vector<float> bias;
  std::optional<BatchNormParams> bn;
};

struct Network {
  ArchitectureSpec arch;
  std::vector<ConvLayer> layers;

  const ConvLayer& layer(std::string_view name) const {
    for (const auto& l : layers) {
      if (l.spec.name == name) return l;
    }
    throw ValueError("network has no layer '" + std::string(name) + "'");
  }
};

namespace detail {
inline std::vector<std::size_t> dims_of(const Shape& s) { return {s.batch, s.channels, s.height, s.width}; }
}  // namespace detail

inline Network network_from_store(const WeightStore& store) {
  if (store.precision != Precision::FP32) {
    throw FormatError(std::string("expected an fp32 weight store, got ") + to_string(store.precision));
  }
  Network net{store.arch, {}};
  for (const auto& spec : store.arch.layers) {
    ConvLayer layer{spec, store.tensor<float>(spec.name + ".weight"), store.values<float>(spec.name + ".bias"),
                    std::nullopt};
    if (!(layer.weight.shape() == spec.conv.weight_shape()) || layer.bias.size() != spec.conv.out_channels) {
      throw FormatError("layer '" + spec.name + "' tensors do not match the architecture");
    }
    if (spec.batch_norm) {
      BatchNormParams bn{store.values<float>(spec.name + ".bn.gamma"), store.values<float>(spec.name + ".bn.beta"),
                         store.values<float>(spec.name + ".bn.running_mean"),
                         store.values<float>(spec.name + ".bn.running_var"), store.arch.config.bn_epsilon};
      bn.validate();
      if (bn.channels() != spec.conv.out_channels) throw FormatError("layer '" + spec.name + "' BN size mismatch");
      layer.bn = std::move(bn);
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

inline WeightStore store_from_network(const Network& net) {
  WeightStore store;
  store.arch = net.arch;
  store.precision = Precision::FP32;
  for (const auto& l : net.layers) {
    if (l.spec.batch_norm != l.bn.has_value()) {
      throw ValueError("layer '" + l.spec.name + "' batch norm presence disagrees with the architecture");
    }
    store.add(l.spec.name + ".weight", l.weight);
    store.add<float>(l.spec.name + ".bias", {l.bias.size()}, l.bias);
    if (l.bn) {
      const auto c = l.bn->channels();
      store.add<float>(l.spec.name + ".bn.gamma", {c}, l.bn->gamma);
      store.add<float>(l.spec.name + ".bn.beta", {c}, l.bn->beta);
      store.add<float>(l.spec.name + ".bn.running_mean", {c}, l.bn->running_mean);
      store.add<float>(l.spec.name + ".bn.running_var", {c}, l.bn->running_var);
    }
  }
  return store;
}

// Fan-in scaled normal weights. The second conv of each residual block is
// damped by 1/sqrt(blocks) and the output projection is narrowed and centred
// on 0.5 so that an untrained network produces non-saturated outputs.
inline WeightStore init_weights(const ArchitectureSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  Network net{spec, {}};
  const double blocks = static_cast<double>(std::max<std::size_t>(spec.config.residual_blocks, 1));
  for (const auto& l : spec.layers) {
    ConvLayer layer{l, Tensor<float>(l.conv.weight_shape()), std::vector<float>(l.conv.out_channels), std::nullopt};
    double gain = 1.0;
    if (l.name.ends_with(".conv2")) gain = 1.0 / std::sqrt(blocks);
    if (l.name == "head.pw") gain = 0.25;
    const double stddev = gain * std::sqrt(2.0 / static_cast<double>(l.conv.fan_in()));
    for (auto& w : layer.weight.data()) w = static_cast<float>(stddev * rng.normal());
    for (auto& b : layer.bias) b = static_cast<float>(rng.uniform(-0.05, 0.05));
    if (l.name == "head.pw") {
      for (auto& b : layer.bias) b += 0.5f;
    }
    if (l.batch_norm) layer.bn = BatchNormParams::identity(l.conv.out_channels, spec.config.bn_epsilon);
    net.layers.push_back(std::move(layer));
  }
  return store_from_network(net);
}

inline Network fold_network(const Network& net) {
  Network out{net.arch, {}};
  for (const auto& l : net.layers) {
    if (!l.bn) {
      out.layers.push_back(l);
      continue;
    }
    auto folded = fold_batchnorm(l.weight, l.bias, *l.bn);
    out.layers.push_back({l.spec, std::move(folded.weights), std::move(folded.bias), std::nullopt});
  }
  return out;
}

template <class T>
Tensor<T> apply_activation(Tensor<T> x, Activation act) {
  switch (act) {
    case Activation::None: return x;
    case Activation::ReLU6: return relu6(x);
    case Activation::Hardtanh01: return hardtanh01(x);
  }
  return x;
}

template <class T>
T apply_activation(T x, Activation act) {
  switch (act) {
    case Activation::None: return x;
    case Activation::ReLU6: return relu6(x);
    case Activation::Hardtanh01: return hardtanh01(x);
  }
  return x;
}

// Walks the refined architecture. `Ops` supplies input/conv/add/concat for a
// value type (a float tensor, a batch of INT8 tensors, ...); ops.input maps
// the network input to that type.
template <class Input, class Ops>
auto run_graph(const ArchitectureSpec& arch, Input input, Ops& ops) {
  using Value = decltype(ops.input(std::move(input)));
  Value x = ops.input(std::move(input));
  Value trunk = ops.conv("stem", x);
  for (std::size_t k = 0; k < arch.config.residual_blocks; ++k) {
    Value h = ops.conv(block_name(k, "conv1"), trunk);
    h = ops.conv(block_name(k, "conv2"), h);
    trunk = ops.add(k, trunk, h);
  }
  Value skip = ops.conv("skip.dw", x);
  Value cat = ops.concat(trunk, skip);
  Value head = ops.conv("head.dw", cat);
  return ops.conv("head.pw", head);
}

namespace detail {

inline void check_input(const ArchitectureSpec& arch, const Shape& s) {
  if (s.channels != arch.config.input_channels) {
    throw ShapeError("network input has " + std::to_string(s.channels) + " channels, expected " +
                     std::to_string(arch.config.input_channels));
  }
  if (s.batch == 0 || s.height == 0 || s.width == 0) throw ShapeError("network input is empty");
}

struct Fp32Ops {
  const Network& net;

  Tensor<float> input(Tensor<float> x) {
    check_input(net.arch, x.shape());
    return x;
  }
  Tensor<float> conv(const std::string& name, const Tensor<float>& x) {
    const auto& l = net.layer(name);
    auto y = conv2d(x, l.weight, l.bias, l.spec.conv);
    if (l.bn) y = batchnorm_apply(y, *l.bn);
    return apply_activation(std::move(y), l.spec.activation);
  }
  Tensor<float> add(std::size_t, const Tensor<float>& a, const Tensor<float>& b) {
    return relu6(add_residual(a, b));
  }
  Tensor<float> concat(const Tensor<float>& a, const Tensor<float>& b) { return concat_channels(a, b); }
};

}  // namespace detail

// Output: (N, 6, H, W) in [0, 1]. BN layers run unfolded unless `net` was
// passed through fold_network.
inline Tensor<float> forward_fp32(const Network& net, const Tensor<float>& input) {
  detail::Fp32Ops ops{net};
  return run_graph(net.arch, input, ops);
}

inline Tensor<float> forward_fp32(const WeightStore& store, const Tensor<float>& input) {
  return forward_fp32(network_from_store(store), input);
}

// ---------------------------------------------------------------------------
// INT8 pipeline

struct QConvLayer {
  LayerSpec spec;
  Tensor<std::int8_t> weight;
  QuantParams weight_qp;
  std::vector<float> bias;  // folded FP32 bias, quantized per call when bias_q is empty
  std::vector<std::int32_t> bias_q;
  std::optional<QuantParams> bias_qp;
};

struct QuantizedNetwork {
  ArchitectureSpec arch;
  std::vector<QConvLayer> layers;

  const QConvLayer& layer(std::string_view name) const {
    for (const auto& l : layers) {
      if (l.spec.name == name) return l;
    }
    throw ValueError("quantized network has no layer '" + std::string(name) + "'");
  }
};

// Per-tensor symmetric INT8 weights. Rejects zero-width weight tensors.
inline QConvLayer quantize_layer(const ConvLayer& l) {
  if (l.bn) throw ValueError("layer '" + l.spec.name + "' must have its batch norm folded before quantization");
  float m = 0.0f;
  for (float w : l.weight.data()) m = std::max(m, std::fabs(w));
  if (!(m > 0.0f) || !std::isfinite(m)) {
    throw ValueError("layer '" + l.spec.name + "' has a zero-width weight range");
  }
  const QuantParams qp = make_qparams(-m, m, 8, Scheme::Symmetric);
  return {l.spec, Tensor<std::int8_t>(l.weight.shape(), quantize(l.weight.data(), qp)), qp, l.bias, {}, std::nullopt};
}

inline QuantizedNetwork quantize_weights(const Network& folded) {
  QuantizedNetwork q{folded.arch, {}};
  for (const auto& l : folded.layers) q.layers.push_back(quantize_layer(l));
  return q;
}

inline CodeClamp activation_codes(const QuantParams& qp, Activation act) {
  switch (act) {
    case Activation::None: return full_range(qp);
    case Activation::ReLU6: return activation_clamp(qp, 0.0f, 6.0f);
    case Activation::Hardtanh01: return activation_clamp(qp, 0.0f, 1.0f);
  }
  return full_range(qp);
}

// Site parameters taken from a weight store.
class StoredSites {
 public:
  static constexpr bool wants_values = false;
  explicit StoredSites(const std::vector<SiteParams>& sites) : sites_(sites) {}

  QuantParams resolve(std::string_view site, std::span<const Tensor<float>>) {
    for (const auto& s : sites_) {
      if (s.site == site) return s.qparams;
    }
    throw FormatError("weight store has no parameters for activation site '" + std::string(site) + "'");
  }

 private:
  const std::vector<SiteParams>& sites_;
};

// Min-max over the values the pipeline produces at each site, across the
// whole batch. With a batch of one this is dynamic quantization.
class ObservingSites {
 public:
  static constexpr bool wants_values = true;

  QuantParams resolve(std::string_view site, std::span<const Tensor<float>> values) {
    MinMaxObserver obs;
    for (const auto& v : values) obs = observe(obs, v.data());
    const QuantParams qp = qparams_from_observer(obs, 8, Scheme::Asymmetric);
    observers.emplace_back(std::string(site), obs);
    sites.push_back({std::string(site), qp});
    return qp;
  }

  std::vector<std::pair<std::string, MinMaxObserver>> observers;
  std::vector<SiteParams> sites;
};

template <class Resolver>
class IntegerOps {
 public:
  using Batch = std::vector<QTensor>;

  IntegerOps(const QuantizedNetwork& net, Resolver& resolver) : net_(net), resolver_(resolver) {}

  Batch input(std::vector<Tensor<float>> xs) {
    if (xs.empty()) throw ValueError("empty input batch");
    for (const auto& x : xs) detail::check_input(net_.arch, x.shape());
    const QuantParams qp = resolve(site::input, xs);
    Batch out;
    for (const auto& x : xs) out.push_back(quantize(x, qp));
    return out;
  }

  Batch conv(const std::string& name, const Batch& xs) {
    const auto& l = net_.layer(name);
    const float sx = xs.front().qp.scale;
    const float sw = l.weight_qp.scale;
    const auto bias = bias_codes(l, xs.front().qp);
    std::vector<Tensor<std::int32_t>> accs;
    accs.reserve(xs.size());
    for (const auto& x : xs) accs.push_back(qconv2d_accumulate(x, l.weight, l.weight_qp, bias, l.spec.conv));

    std::vector<Tensor<float>> reals;
    if constexpr (Resolver::wants_values) {
      const double s = static_cast<double>(sx) * static_cast<double>(sw);
      for (const auto& acc : accs) {
        std::vector<float> r(acc.size());
        auto a = acc.data();
        for (std::size_t k = 0; k < r.size(); ++k) {
          r[k] = apply_activation(static_cast<float>(static_cast<double>(a[k]) * s), l.spec.activation);
        }
        reals.emplace_back(acc.shape(), std::move(r));
      }
    }
    const QuantParams qp = resolver_.resolve(name, reals);
    const CodeClamp clamp = activation_codes(qp, l.spec.activation);
    Batch out;
    for (const auto& acc : accs) out.push_back(requantize_accumulators(acc, sx, sw, qp, clamp));
    return out;
  }

  // Both addends are rescaled to the add site's scale in INT32 (no
  // saturation: the site range is post-ReLU6 but an addend may be negative),
  // summed, shifted by the site's zero point and clamped by the fused ReLU6.
  Batch add(std::size_t k, const Batch& a, const Batch& b) {
    std::vector<Tensor<float>> reals;
    if constexpr (Resolver::wants_values) {
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a[i].shape() == b[i].shape())) throw ShapeError("residual add shape mismatch");
        std::vector<float> r(a[i].codes.size());
        auto qa = a[i].codes.data();
        auto qb = b[i].codes.data();
        for (std::size_t e = 0; e < r.size(); ++e) {
          const double v = static_cast<double>(qa[e] - a[i].qp.zero_point) * a[i].qp.scale +
                           static_cast<double>(qb[e] - b[i].qp.zero_point) * b[i].qp.scale;
          r[e] = relu6(static_cast<float>(v));
        }
        reals.emplace_back(a[i].shape(), std::move(r));
      }
    }
    const QuantParams qp = resolver_.resolve(site::add(k), reals);
    const CodeClamp clamp = activation_codes(qp, Activation::ReLU6);
    Batch out;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!(a[i].shape() == b[i].shape())) throw ShapeError("residual add shape mismatch");
      const auto x1 = rescale_codes(a[i], qp.scale);
      const auto x2 = rescale_codes(b[i], qp.scale);
      QTensor y{Tensor<std::int8_t>(a[i].shape()), qp};
      auto dst = y.codes.data();
      for (std::size_t e = 0; e < dst.size(); ++e) {
        const std::int64_t sum = std::int64_t{x1[e]} + x2[e] + qp.zero_point;
        dst[e] = static_cast<std::int8_t>(saturate(static_cast<double>(sum), clamp));
      }
      out.push_back(std::move(y));
    }
    return out;
  }

  Batch concat(const Batch& a, const Batch& b) {
    std::vector<Tensor<float>> reals;
    if constexpr (Resolver::wants_values) {
      for (std::size_t i = 0; i < a.size(); ++i) reals.push_back(concat_channels(dequantize(a[i]), dequantize(b[i])));
    }
    const QuantParams qp = resolver_.resolve(site::concat, reals);
    Batch out;
    for (std::size_t i = 0; i < a.size(); ++i) {
      out.push_back({concat_channels(requantize(a[i], qp).codes, requantize(b[i], qp).codes), qp});
    }
    return out;
  }

 private:
  QuantParams resolve(std::string_view site, const std::vector<Tensor<float>>& values) {
    if constexpr (Resolver::wants_values) {
      return resolver_.resolve(site, values);
    } else {
      return resolver_.resolve(site, {});
    }
  }

  static std::vector<std::int32_t> bias_codes(const QConvLayer& l, const QuantParams& input_qp) {
    if (l.bias_q.empty()) return quantize_bias(l.bias, input_qp.scale, l.weight_qp.scale);
    const float expected = bias_qparams(input_qp.scale, l.weight_qp.scale).scale;
    if (!l.bias_qp || l.bias_qp->scale != expected) {
      throw FormatError("layer '" + l.spec.name + "' bias scale does not equal S_x * S_w");
    }
    return l.bias_q;
  }

  const QuantizedNetwork& net_;
  Resolver& resolver_;
};

// Final activation codes -> amplitude/phase values in [0, 1].
inline Tensor<float> decode_output(const QTensor& out) { return hardtanh01(dequantize(out)); }

struct CalibrationRecord {
  std::vector<std::pair<std::string, MinMaxObserver>> observers;
  std::vector<SiteParams> sites;
  std::size_t samples = 0;

  const QuantParams& site(std::string_view name) const {
    for (const auto& s : sites) {
      if (s.site == name) return s.qparams;
    }
    throw ValueError("calibration record is missing site '" + std::string(name) + "'");
  }
};

inline CalibrationRecord calibrate(const QuantizedNetwork& qnet, std::span<const Tensor<float>> inputs) {
  if (inputs.empty()) throw ValueError("empty calibration set");
  ObservingSites sites;
  IntegerOps<ObservingSites> ops(qnet, sites);
  run_graph(qnet.arch, std::vector<Tensor<float>>(inputs.begin(), inputs.end()), ops);
  return {std::move(sites.observers), std::move(sites.sites), inputs.size()};
}

// Runs the BN-folded, weight-quantized network over the calibration inputs
// and records the activation range of every site.
inline CalibrationRecord calibrate(const WeightStore& store, std::span<const Tensor<float>> inputs) {
  if (inputs.empty()) throw ValueError("empty calibration set");
  return calibrate(quantize_weights(fold_network(network_from_store(store))), inputs);
}

inline WeightStore convert_int8_static(const WeightStore& fp32, const CalibrationRecord& record) {
  const auto qnet = quantize_weights(fold_network(network_from_store(fp32)));
  WeightStore out;
  out.arch = fp32.arch;
  out.precision = Precision::INT8Static;
  for (const auto& name : fp32.arch.activation_sites()) {
    const auto count = std::count_if(record.sites.begin(), record.sites.end(),
                                     [&](const SiteParams& s) { return s.site == name; });
    if (count != 1) throw ValueError("calibration record must cover site '" + name + "' exactly once");
    out.activations.push_back({name, record.site(name)});
  }
  for (const auto& l : qnet.layers) {
    const float sx = record.site(fp32.arch.input_site(l.spec.name)).scale;
    const auto bias = quantize_bias(l.bias, sx, l.weight_qp.scale);
    out.add(l.spec.name + ".weight", l.weight, l.weight_qp);
    out.add<std::int32_t>(l.spec.name + ".bias", {bias.size()}, bias, bias_qparams(sx, l.weight_qp.scale));
  }
  return out;
}

// INT8 weights with FP32 (folded) biases and no activation parameters: the
// store layout used for on-the-fly activation quantization.
inline WeightStore convert_int8_dynamic(const WeightStore& fp32) {
  const auto qnet = quantize_weights(fold_network(network_from_store(fp32)));
  WeightStore out;
  out.arch = fp32.arch;
  out.precision = Precision::INT8Dynamic;
  for (const auto& l : qnet.layers) {
    out.add(l.spec.name + ".weight", l.weight, l.weight_qp);
    out.add<float>(l.spec.name + ".bias", {l.bias.size()}, l.bias);
  }
  return out;
}

// Rebuilds the integer network from an int8-static or int8-dynamic store,
// or quantizes an fp32 store's weights.
inline QuantizedNetwork quantized_network_from_store(const WeightStore& store) {
  if (store.precision == Precision::FP32) return quantize_weights(fold_network(network_from_store(store)));
  QuantizedNetwork q{store.arch, {}};
  for (const auto& spec : store.arch.layers) {
    const auto& wrec = store.record(spec.name + ".weight");
    if (!wrec.qparams) throw FormatError("INT8 weight '" + wrec.name + "' has no quantization parameters");
    QConvLayer l{spec, store.tensor<std::int8_t>(wrec.name), *wrec.qparams, {}, {}, std::nullopt};
    if (!(l.weight.shape() == spec.conv.weight_shape())) throw FormatError("layer '" + spec.name + "' weight shape mismatch");
    const auto& brec = store.record(spec.name + ".bias");
    if (store.precision == Precision::INT8Static) {
      if (!brec.qparams) throw FormatError("INT32 bias '" + brec.name + "' has no quantization parameters");
      l.bias_q = store.values<std::int32_t>(brec.name);
      l.bias_qp = brec.qparams;
    } else {
      l.bias = store.values<float>(brec.name);
    }
    if (std::max(l.bias.size(), l.bias_q.size()) != spec.conv.out_channels) {
      throw FormatError("layer '" + spec.name + "' bias length mismatch");
    }
    q.layers.push_back(std::move(l));
  }
  return q;
}

class Int8StaticModel {
 public:
  explicit Int8StaticModel(const WeightStore& store) : net_(load(store)), sites_(store.activations) {
    for (const auto& name : net_.arch.activation_sites()) StoredSites(sites_).resolve(name, {});
  }

  QTensor forward_codes(const Tensor<float>& input) const {
    StoredSites resolver(sites_);
    IntegerOps<StoredSites> ops(net_, resolver);
    return run_graph(net_.arch, std::vector<Tensor<float>>{input}, ops).front();
  }
  Tensor<float> forward(const Tensor<float>& input) const { return decode_output(forward_codes(input)); }

  const QuantizedNetwork& network() const { return net_; }
  const std::vector<SiteParams>& sites() const { return sites_; }

 private:
  static QuantizedNetwork load(const WeightStore& store) {
    if (store.precision != Precision::INT8Static) {
      throw FormatError(std::string("expected an int8-static weight store, got ") + to_string(store.precision));
    }
    return quantized_network_from_store(store);
  }

  QuantizedNetwork net_;
  std::vector<SiteParams> sites_;
};

class Int8DynamicModel {
 public:
  explicit Int8DynamicModel(const WeightStore& store) : net_(load(store)) {}

  QTensor forward_codes(const Tensor<float>& input) const {
    ObservingSites resolver;
    IntegerOps<ObservingSites> ops(net_, resolver);
    return run_graph(net_.arch, std::vector<Tensor<float>>{input}, ops).front();
  }
  Tensor<float> forward(const Tensor<float>& input) const { return decode_output(forward_codes(input)); }

  const QuantizedNetwork& network() const { return net_; }

 private:
  static QuantizedNetwork load(const WeightStore& store) {
    if (store.precision == Precision::INT8Static) {
      throw FormatError("dynamic quantization needs an fp32 or int8-dynamic weight store");
    }
    return quantized_network_from_store(store);
  }

  QuantizedNetwork net_;
};

inline Tensor<float> forward_int8_static(const WeightStore& store, const Tensor<float>& input) {
  return Int8StaticModel(store).forward(input);
}

inline Tensor<float> forward_int8_dynamic(const WeightStore& store, const Tensor<float>& input) {
  return Int8DynamicModel(store).forward(input);
}

// ---------------------------------------------------------------------------
// Fake-quantization simulation of the static INT8 graph, in double precision.

namespace detail {

class FakeQuantOps {
 public:
  FakeQuantOps(const QuantizedNetwork& net, const std::vector<SiteParams>& sites) : net_(net), sites_(sites) {}

  Tensor<double> input(Tensor<float> x) {
    check_input(net_.arch, x.shape());
    return fake_quantize(tensor_cast<double>(x), site(site::input));
  }

  Tensor<double> conv(const std::string& name, const Tensor<double>& x) {
    const auto& l = net_.layer(name);
    const double sx = site(net_.arch.input_site(name)).scale;
    const double sw = l.weight_qp.scale;
    const Tensor<double> w(l.weight.shape(), dequantize<double>(l.weight.data(), l.weight_qp));
    std::vector<double> b(l.spec.conv.out_channels);
    const auto bias_q = l.bias_q.empty() ? quantize_bias(l.bias, static_cast<float>(sx), l.weight_qp.scale) : l.bias_q;
    for (std::size_t o = 0; o < b.size(); ++o) b[o] = static_cast<double>(bias_q[o]) * (sx * sw);
    auto y = apply_activation(conv2d(x, w, b, l.spec.conv), l.spec.activation);
    return fake_quantize(y, site(name));
  }

  Tensor<double> add(std::size_t k, const Tensor<double>& a, const Tensor<double>& b) {
    const auto& qp = site(site::add(k));
    return fake_quantize(relu6(add_residual(round_to_scale(a, qp.scale), round_to_scale(b, qp.scale))), qp);
  }

  Tensor<double> concat(const Tensor<double>& a, const Tensor<double>& b) {
    return fake_quantize(concat_channels(a, b), site(site::concat));
  }

 private:
  const QuantParams& site(std::string_view name) const {
    for (const auto& s : sites_) {
      if (s.site == name) return s.qparams;
    }
    throw FormatError("missing activation site '" + std::string(name) + "'");
  }

  const QuantizedNetwork& net_;
  const std::vector<SiteParams>& sites_;
};

}  // namespace detail

// Output-site values of the simulated static INT8 network (on the output
// quantization grid, before the final [0, 1] clamp).
inline Tensor<double> simulate_int8_static(const WeightStore& store, const Tensor<float>& input) {
  if (store.precision != Precision::INT8Static) throw FormatError("simulation needs an int8-static store");
  const auto net = quantized_network_from_store(store);
  detail::FakeQuantOps ops(net, store.activations);
  return run_graph(net.arch, input, ops);
}

inline Tensor<std::int8_t> simulate_int8_static_codes(const WeightStore& store, const Tensor<float>& input) {
  const auto out = simulate_int8_static(store, input);
  return Tensor<std::int8_t>(out.shape(), quantize(out.data(), store.site("head.pw")));
}

}  // namespace holoq

#endif  // HOLOQ_MODEL_HPP_
