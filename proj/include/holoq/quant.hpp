#ifndef HOLOQ_QUANT_HPP_
#define HOLOQ_QUANT_HPP_

// Uniform affine integer quantization.
//
//   Q(x)   = clamp(round(x / S) + Z, -2^(b-1), 2^(b-1) - 1)
//   Q~(q)  = (q - Z) * S
//   S      = (beta - alpha) / (2^b - 1)
//   Z      = -round(alpha / S) - 2^(b-1)     (asymmetric; Z = 0 when symmetric)
//
// round() is round-half-to-even throughout. All intermediate arithmetic is in
// double; scales are stored as float.

#include <holoq/error.hpp>
#include <holoq/tensor.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace holoq {

enum class Scheme { Symmetric, Asymmetric };

inline const char* to_string(Scheme s) {
  return s == Scheme::Symmetric ? "symmetric" : "asymmetric";
}

inline Scheme parse_scheme(std::string_view s) {
  if (s == "symmetric") return Scheme::Symmetric;
  if (s == "asymmetric") return Scheme::Asymmetric;
  throw FormatError("unknown quantization scheme '" + std::string(s) + "'");
}

// Half-to-even rounding, independent of the caller's floating-point
// environment.
inline double round_half_even(double v) {
  const double r = std::round(v);  // half away from zero
  if (std::fabs(v - std::trunc(v)) == 0.5) {
    return 2.0 * std::round(v / 2.0);
  }
  return r;
}

struct QuantParams {
  float scale = 1.0f;
  std::int32_t zero_point = 0;
  int bits = 8;
  Scheme scheme = Scheme::Asymmetric;
  float range_min = 0.0f;  // alpha
  float range_max = 1.0f;  // beta

  std::int64_t qmin() const { return -(std::int64_t{1} << (bits - 1)); }
  std::int64_t qmax() const { return (std::int64_t{1} << (bits - 1)) - 1; }

  void validate() const {
    if (!(scale > 0.0f) || !std::isfinite(scale)) throw ValueError("quantization scale must be positive");
    if (bits < 2 || bits > 32) throw ValueError("quantization bit width out of range");
    if (!(range_min < range_max)) throw ValueError("quantization clip range is empty");
    if (scheme == Scheme::Symmetric && zero_point != 0) {
      throw ValueError("symmetric quantization requires a zero point of 0");
    }
  }

  bool operator==(const QuantParams&) const = default;
};

inline float scale_from_range(float alpha, float beta, int bits) {
  if (bits < 2 || bits > 32) throw ValueError("bit width must be in [2, 32]");
  if (!std::isfinite(alpha) || !std::isfinite(beta)) throw ValueError("clip range is not finite");
  if (!(beta > alpha)) {
    throw ValueError("degenerate clip range [" + std::to_string(alpha) + ", " +
                     std::to_string(beta) + "]");
  }
  const double levels = std::ldexp(1.0, bits) - 1.0;
  const auto s = static_cast<float>((static_cast<double>(beta) - alpha) / levels);
  if (!(s > 0.0f)) throw ValueError("clip range too narrow for a float scale");
  // Rounding to float can leave beta/S a hair short of a half-integer that
  // alpha/S crosses, so beta would quantize one code below the top.
  // Stepping S by an ulp restores the full span; overshoot saturates.
  const auto span = [&](float c) {
    return round_half_even(static_cast<double>(beta) / c) - round_half_even(static_cast<double>(alpha) / c);
  };
  if (span(s) >= levels) return s;
  for (float c : {std::nextafter(s, 0.0f), std::nextafter(s, HUGE_VALF)}) {
    if (c > 0.0f && span(c) >= levels) return c;
  }
  return s;
}

inline std::int32_t zero_point_asymmetric(float alpha, float scale, int bits) {
  if (!(scale > 0.0f)) throw ValueError("scale must be positive");
  const double z = -round_half_even(static_cast<double>(alpha) / scale) - std::ldexp(1.0, bits - 1);
  if (z < std::numeric_limits<std::int32_t>::min() || z > std::numeric_limits<std::int32_t>::max()) {
    throw InvariantError("zero point does not fit in 32 bits");
  }
  return static_cast<std::int32_t>(z);
}

// Builds parameters for the clip range [alpha, beta]. For the symmetric
// scheme the range is first made symmetric around zero.
inline QuantParams make_qparams(float alpha, float beta, int bits, Scheme scheme) {
  QuantParams qp;
  qp.bits = bits;
  qp.scheme = scheme;
  if (scheme == Scheme::Symmetric) {
    const float m = std::max(std::fabs(alpha), std::fabs(beta));
    alpha = -m;
    beta = m;
  }
  qp.range_min = alpha;
  qp.range_max = beta;
  qp.scale = scale_from_range(alpha, beta, bits);
  qp.zero_point = scheme == Scheme::Symmetric ? 0 : zero_point_asymmetric(alpha, qp.scale, bits);
  return qp;
}

template <class Real>
std::int32_t quantize_value(Real x, const QuantParams& qp) {
  const double q = round_half_even(static_cast<double>(x) / static_cast<double>(qp.scale)) +
                   static_cast<double>(qp.zero_point);
  const double lo = static_cast<double>(qp.qmin());
  const double hi = static_cast<double>(qp.qmax());
  return static_cast<std::int32_t>(q < lo ? lo : (q > hi ? hi : q));
}

template <class Real = float>
Real dequantize_value(std::int64_t q, const QuantParams& qp) {
  return static_cast<Real>(static_cast<double>(q - qp.zero_point) * static_cast<double>(qp.scale));
}

template <class Real>
std::vector<std::int8_t> quantize(std::span<const Real> x, const QuantParams& qp) {
  qp.validate();
  if (qp.bits > 8) throw ValueError("INT8 quantize called with more than 8 bits");
  std::vector<std::int8_t> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    out[k] = static_cast<std::int8_t>(quantize_value(x[k], qp));
  }
  return out;
}

template <class Real = float>
std::vector<Real> dequantize(std::span<const std::int8_t> q, const QuantParams& qp) {
  qp.validate();
  std::vector<Real> out(q.size());
  for (std::size_t k = 0; k < q.size(); ++k) out[k] = dequantize_value<Real>(q[k], qp);
  return out;
}

// Simulated quantization: exactly dequantize(quantize(x)).
template <class Real>
std::vector<Real> fake_quantize(std::span<const Real> x, const QuantParams& qp) {
  const auto q = quantize(x, qp);
  return dequantize<Real>(q, qp);
}

template <class Real>
Tensor<Real> fake_quantize(const Tensor<Real>& x, const QuantParams& qp) {
  return Tensor<Real>(x.shape(), fake_quantize(x.data(), qp));
}

// Running min/max envelope of everything observed so far.
struct MinMaxObserver {
  float running_min = std::numeric_limits<float>::infinity();
  float running_max = -std::numeric_limits<float>::infinity();
  std::uint64_t count = 0;

  bool empty() const { return count == 0; }
  bool operator==(const MinMaxObserver&) const = default;
};

inline MinMaxObserver observe(MinMaxObserver obs, std::span<const float> x) {
  for (float v : x) {
    obs.running_min = std::min(obs.running_min, v);
    obs.running_max = std::max(obs.running_max, v);
  }
  ++obs.count;
  return obs;
}

inline MinMaxObserver merge(const MinMaxObserver& a, const MinMaxObserver& b) {
  return {std::min(a.running_min, b.running_min), std::max(a.running_max, b.running_max),
          a.count + b.count};
}

// An all-constant range c is widened to [c - 1/2, c + 1/2].
inline QuantParams qparams_from_observer(const MinMaxObserver& obs, int bits = 8,
                                         Scheme scheme = Scheme::Asymmetric) {
  if (obs.empty() || !(obs.running_min <= obs.running_max)) {
    throw ValueError("observer has no finite observations");
  }
  float lo = obs.running_min;
  float hi = obs.running_max;
  if (scheme == Scheme::Symmetric) {
    const float m = std::max(std::fabs(lo), std::fabs(hi));
    lo = -m;
    hi = m;
  }
  if (lo == hi) {
    lo -= 0.5f;
    hi += 0.5f;
  }
  return make_qparams(lo, hi, bits, scheme);
}

inline QuantParams dynamic_qparams(std::span<const float> x, int bits = 8,
                                   Scheme scheme = Scheme::Asymmetric) {
  if (x.empty()) throw ValueError("dynamic quantization of an empty array");
  return qparams_from_observer(observe({}, x), bits, scheme);
}

// A quantized activation: INT8 codes plus the parameters that decode them.
struct QTensor {
  Tensor<std::int8_t> codes;
  QuantParams qp;

  const Shape& shape() const { return codes.shape(); }
  bool operator==(const QTensor&) const = default;
};

inline QTensor quantize(const Tensor<float>& x, const QuantParams& qp) {
  return {Tensor<std::int8_t>(x.shape(), quantize(x.data(), qp)), qp};
}

template <class Real = float>
Tensor<Real> dequantize(const QTensor& x) {
  return Tensor<Real>(x.codes.shape(), dequantize<Real>(x.codes.data(), x.qp));
}

// Rounds an FP32 bias onto the INT32 accumulator grid of scale S_x * S_w.
inline std::vector<std::int32_t> quantize_bias(std::span<const float> bias, float input_scale,
                                               float weight_scale) {
  const double s = static_cast<double>(input_scale) * static_cast<double>(weight_scale);
  std::vector<std::int32_t> out(bias.size());
  for (std::size_t k = 0; k < bias.size(); ++k) {
    const double q = round_half_even(static_cast<double>(bias[k]) / s);
    if (std::fabs(q) > static_cast<double>(std::numeric_limits<std::int32_t>::max())) {
      throw InvariantError("quantized bias does not fit in INT32");
    }
    out[k] = static_cast<std::int32_t>(q);
  }
  return out;
}

inline QuantParams bias_qparams(float input_scale, float weight_scale) {
  QuantParams qp;
  qp.scale = static_cast<float>(static_cast<double>(input_scale) * weight_scale);
  qp.zero_point = 0;
  qp.bits = 32;
  qp.scheme = Scheme::Symmetric;
  const double lim = static_cast<double>(qp.scale) * 2147483647.0;
  qp.range_min = static_cast<float>(-lim);
  qp.range_max = static_cast<float>(lim);
  return qp;
}

// Inclusive code interval an output is clamped to.
struct CodeClamp {
  std::int32_t lo = -128;
  std::int32_t hi = 127;
};

inline CodeClamp full_range(const QuantParams& qp) {
  return {static_cast<std::int32_t>(qp.qmin()), static_cast<std::int32_t>(qp.qmax())};
}

// Codes of a fused clamp activation [lo, hi] at parameters `qp`. Q() is
// monotone, so clamping codes equals quantizing clamped reals.
inline CodeClamp activation_clamp(const QuantParams& qp, float lo, float hi) {
  return {quantize_value(lo, qp), quantize_value(hi, qp)};
}

inline std::int32_t saturate(double q, CodeClamp c) {
  return static_cast<std::int32_t>(q < c.lo ? c.lo : (q > c.hi ? c.hi : q));
}

// Re-expresses codes of one parameter set under another, via the real value
// (q - Z_in) * S_in. Matches quantize(dequantize(x)) bit for bit.
inline QTensor requantize(const QTensor& x, const QuantParams& out_qp) {
  QTensor out{Tensor<std::int8_t>(x.shape()), out_qp};
  auto src = x.codes.data();
  auto dst = out.codes.data();
  const double s_in = x.qp.scale;
  const double s_out = out_qp.scale;
  const CodeClamp c = full_range(out_qp);
  for (std::size_t k = 0; k < src.size(); ++k) {
    const double real = static_cast<double>(src[k] - x.qp.zero_point) * s_in;
    dst[k] = static_cast<std::int8_t>(saturate(round_half_even(real / s_out) + out_qp.zero_point, c));
  }
  return out;
}

// Zero-point-free codes of x on a grid of step out_scale, without saturation:
// round((q - Z_in) * S_in / out_scale). Used where several operands share a
// scale before an integer sum.
inline std::vector<std::int32_t> rescale_codes(const QTensor& x, float out_scale) {
  if (!(out_scale > 0.0f)) throw ValueError("rescale_codes needs a positive scale");
  std::vector<std::int32_t> out(x.codes.size());
  auto src = x.codes.data();
  const double s_in = x.qp.scale;
  const double s_out = out_scale;
  for (std::size_t k = 0; k < src.size(); ++k) {
    const double real = static_cast<double>(src[k] - x.qp.zero_point) * s_in;
    out[k] = static_cast<std::int32_t>(round_half_even(real / s_out));
  }
  return out;
}

// Real-valued counterpart of rescale_codes: round(x / scale) * scale.
template <class Real>
Tensor<Real> round_to_scale(const Tensor<Real>& x, float scale) {
  if (!(scale > 0.0f)) throw ValueError("round_to_scale needs a positive scale");
  const double s = scale;
  std::vector<Real> out(x.size());
  auto src = x.data();
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = static_cast<Real>(round_half_even(static_cast<double>(src[k]) / s) * s);
  }
  return Tensor<Real>(x.shape(), std::move(out));
}

namespace detail {

template <class Shifted>
Tensor<Shifted> shift_codes(const Tensor<std::int8_t>& q, std::int32_t zero_point) {
  std::vector<Shifted> data(q.size());
  auto src = q.data();
  for (std::size_t k = 0; k < data.size(); ++k) {
    data[k] = static_cast<Shifted>(static_cast<std::int32_t>(src[k]) - zero_point);
  }
  return Tensor<Shifted>(q.shape(), std::move(data));
}

inline std::int64_t max_abs_shift(const QuantParams& qp) {
  return std::max(std::abs(qp.qmin() - qp.zero_point), std::abs(qp.qmax() - qp.zero_point));
}

}  // namespace detail

// INT32 accumulators of a quantized convolution:
//   acc[o] = bias[o] + sum (x_q - Z_x) * (w_q - Z_w).
// Zero padding lives in the shifted domain, so padded taps contribute 0.
inline Tensor<std::int32_t> qconv2d_accumulate(const QTensor& input, const Tensor<std::int8_t>& weights,
                                               const QuantParams& weight_qp,
                                               std::span<const std::int32_t> bias,
                                               const ConvDescriptor& desc) {
  input.qp.validate();
  weight_qp.validate();
  std::int64_t bias_max = 0;
  for (auto b : bias) bias_max = std::max<std::int64_t>(bias_max, std::abs(static_cast<std::int64_t>(b)));
  const std::int64_t xs = detail::max_abs_shift(input.qp);
  const std::int64_t ws = detail::max_abs_shift(weight_qp);
  const std::int64_t bound = static_cast<std::int64_t>(desc.fan_in()) * xs * ws + bias_max;
  if (bound > std::numeric_limits<std::int32_t>::max()) {
    throw InvariantError("INT32 accumulator could overflow: bound " + std::to_string(bound));
  }
  if (xs <= 32767 && ws <= 32767) {
    const auto x = detail::shift_codes<std::int16_t>(input.codes, input.qp.zero_point);
    const auto w = detail::shift_codes<std::int16_t>(weights, weight_qp.zero_point);
    return detail::grouped_conv<std::int16_t, std::int16_t, std::int32_t, std::int32_t>(x, w, bias, desc);
  }
  const auto x = detail::shift_codes<std::int32_t>(input.codes, input.qp.zero_point);
  const auto w = detail::shift_codes<std::int32_t>(weights, weight_qp.zero_point);
  return detail::grouped_conv<std::int32_t, std::int32_t, std::int32_t, std::int32_t>(x, w, bias, desc);
}

// y_q = clamp(round(acc * (S_x * S_w / S_y)) + Z_y); the multiplier is
// evaluated in double.
inline QTensor requantize_accumulators(const Tensor<std::int32_t>& acc, float input_scale,
                                       float weight_scale, const QuantParams& out_qp,
                                       CodeClamp clamp) {
  out_qp.validate();
  const double multiplier =
      static_cast<double>(input_scale) * static_cast<double>(weight_scale) / out_qp.scale;
  QTensor out{Tensor<std::int8_t>(acc.shape()), out_qp};
  auto src = acc.data();
  auto dst = out.codes.data();
  for (std::size_t k = 0; k < src.size(); ++k) {
    dst[k] = static_cast<std::int8_t>(
        saturate(round_half_even(static_cast<double>(src[k]) * multiplier) + out_qp.zero_point, clamp));
  }
  return out;
}

// Quantized convolution with INT32 accumulation and requantization to
// `out_qp`. `clamp` narrows the output codes for fused activations.
inline QTensor qconv2d(const QTensor& input, const Tensor<std::int8_t>& weights,
                       const QuantParams& weight_qp, std::span<const std::int32_t> bias,
                       const QuantParams& out_qp, const ConvDescriptor& desc,
                       std::optional<CodeClamp> clamp = std::nullopt) {
  const auto acc = qconv2d_accumulate(input, weights, weight_qp, bias, desc);
  return requantize_accumulators(acc, input.qp.scale, weight_qp.scale, out_qp,
                                 clamp.value_or(full_range(out_qp)));
}

}  // namespace holoq

#endif  // HOLOQ_QUANT_HPP_
