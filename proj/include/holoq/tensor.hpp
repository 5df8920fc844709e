#ifndef HOLOQ_TENSOR_HPP_
#define HOLOQ_TENSOR_HPP_

// Dense NCHW tensors and the FP32 reference kernels of the hologram network.
//
// Every kernel is a pure function. Convolutions accumulate each output
// element over (input channel, kernel row, kernel column) in that fixed
// order; parallelism is only ever across output planes, so results are
// bit-identical for any thread count.

#include <holoq/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace holoq {

enum class ElemKind { FP32, INT8, INT32 };

template <class T>
struct elem_kind_of;
template <>
struct elem_kind_of<float> {
  static constexpr ElemKind value = ElemKind::FP32;
};
template <>
struct elem_kind_of<std::int8_t> {
  static constexpr ElemKind value = ElemKind::INT8;
};
template <>
struct elem_kind_of<std::int32_t> {
  static constexpr ElemKind value = ElemKind::INT32;
};

inline std::size_t elem_size(ElemKind kind) {
  switch (kind) {
    case ElemKind::FP32: return 4;
    case ElemKind::INT8: return 1;
    case ElemKind::INT32: return 4;
  }
  return 0;
}

inline const char* to_string(ElemKind kind) {
  switch (kind) {
    case ElemKind::FP32: return "f32";
    case ElemKind::INT8: return "i8";
    case ElemKind::INT32: return "i32";
  }
  return "?";
}

struct Shape {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t numel() const { return batch * channels * height * width; }
  std::size_t plane() const { return height * width; }
  bool operator==(const Shape&) const = default;

  std::string to_string() const {
    return "(" + std::to_string(batch) + "," + std::to_string(channels) + "," +
           std::to_string(height) + "," + std::to_string(width) + ")";
  }
};

template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{}) : shape_(shape), data_(shape.numel(), fill) {}
  Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.numel()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_.to_string());
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T* plane(std::size_t n, std::size_t c) {
    return data_.data() + (n * shape_.channels + c) * shape_.plane();
  }
  const T* plane(std::size_t n, std::size_t c) const {
    return data_.data() + (n * shape_.channels + c) * shape_.plane();
  }

  T& operator()(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    return data_[((n * shape_.channels + c) * shape_.height + y) * shape_.width + x];
  }
  const T& operator()(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
    return data_[((n * shape_.channels + c) * shape_.height + y) * shape_.width + x];
  }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

// Stride 1, zero padding of (k-1)/2 on each side so the spatial size is kept.
struct ConvDescriptor {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel_h = 3;
  std::size_t kernel_w = 3;
  std::size_t groups = 1;

  std::size_t pad_h() const { return (kernel_h - 1) / 2; }
  std::size_t pad_w() const { return (kernel_w - 1) / 2; }
  std::size_t in_per_group() const { return in_channels / groups; }
  std::size_t out_per_group() const { return out_channels / groups; }
  // Multiply-accumulates contributing to one output element.
  std::size_t fan_in() const { return in_per_group() * kernel_h * kernel_w; }
  bool depthwise() const { return groups > 1 && groups == in_channels && groups == out_channels; }
  Shape weight_shape() const { return {out_channels, in_per_group(), kernel_h, kernel_w}; }

  void validate() const {
    if (kernel_h % 2 == 0 || kernel_w % 2 == 0) {
      throw ValueError("convolution kernel sizes must be odd");
    }
    if (in_channels == 0 || out_channels == 0 || groups == 0) {
      throw ValueError("convolution channel counts must be positive");
    }
    if (in_channels % groups != 0 || out_channels % groups != 0) {
      throw ValueError("convolution channels not divisible by groups");
    }
  }

  bool operator==(const ConvDescriptor&) const = default;
};

struct BatchNormParams {
  std::vector<float> gamma;
  std::vector<float> beta;
  std::vector<float> running_mean;
  std::vector<float> running_var;
  float epsilon = 1e-5f;

  static BatchNormParams identity(std::size_t channels, float eps = 1e-5f) {
    return {std::vector<float>(channels, 1.0f), std::vector<float>(channels, 0.0f),
            std::vector<float>(channels, 0.0f), std::vector<float>(channels, 1.0f), eps};
  }

  std::size_t channels() const { return gamma.size(); }

  void validate() const {
    const auto c = gamma.size();
    if (beta.size() != c || running_mean.size() != c || running_var.size() != c) {
      throw ShapeError("batch norm parameter vectors differ in length");
    }
    for (float v : running_var) {
      if (v < 0.0f) throw ValueError("batch norm running variance is negative");
    }
  }
};

namespace detail {

// Adds one kernel's contribution over a single HxW plane into `out`.
// For a fixed output element the taps arrive in (row, column) order.
template <class In, class Wt, class Acc>
void accumulate_plane(const In* in, std::size_t height, std::size_t width, const Wt* kernel,
                      std::size_t kh, std::size_t kw, Acc* out) {
  const auto ph = static_cast<std::ptrdiff_t>((kh - 1) / 2);
  const auto pw = static_cast<std::ptrdiff_t>((kw - 1) / 2);
  const auto h = static_cast<std::ptrdiff_t>(height);
  const auto w = static_cast<std::ptrdiff_t>(width);
  for (std::size_t i = 0; i < kh; ++i) {
    const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(i) - ph;
    const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy);
    const std::ptrdiff_t y1 = std::min<std::ptrdiff_t>(h, h - dy);
    for (std::size_t j = 0; j < kw; ++j) {
      const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(j) - pw;
      const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
      const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(w, w - dx);
      const Acc tap = static_cast<Acc>(kernel[i * kw + j]);
      for (std::ptrdiff_t y = y0; y < y1; ++y) {
        const In* src = in + (y + dy) * w + dx;
        Acc* dst = out + y * w;
        for (std::ptrdiff_t x = x0; x < x1; ++x) {
          dst[x] += static_cast<Acc>(src[x]) * tap;
        }
      }
    }
  }
}

inline void check_conv_shapes(const Shape& in, const Shape& weight, std::size_t bias_len,
                              const ConvDescriptor& desc) {
  desc.validate();
  if (in.channels != desc.in_channels) {
    throw ShapeError("conv input has " + std::to_string(in.channels) + " channels, expected " +
                     std::to_string(desc.in_channels));
  }
  if (!(weight == desc.weight_shape())) {
    throw ShapeError("conv weight shape " + weight.to_string() + " does not match descriptor " +
                     desc.weight_shape().to_string());
  }
  if (bias_len != desc.out_channels) {
    throw ShapeError("conv bias length does not match out_channels");
  }
}

// Runs `accumulate_plane` for every (batch, output channel) pair. `Acc` holds
// the running sums; `bias` is added once after the taps.
template <class In, class Wt, class Acc, class Bias>
Tensor<Acc> grouped_conv(const Tensor<In>& input, const Tensor<Wt>& weights,
                         std::span<const Bias> bias, const ConvDescriptor& desc) {
  check_conv_shapes(input.shape(), weights.shape(), bias.size(), desc);
  const Shape& s = input.shape();
  Tensor<Acc> out({s.batch, desc.out_channels, s.height, s.width});
  const std::size_t cin = desc.in_per_group();
  const std::size_t cout = desc.out_per_group();
  const std::size_t taps = desc.kernel_h * desc.kernel_w;
  const auto jobs = static_cast<std::ptrdiff_t>(s.batch * desc.out_channels);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t job = 0; job < jobs; ++job) {
    const std::size_t n = static_cast<std::size_t>(job) / desc.out_channels;
    const std::size_t o = static_cast<std::size_t>(job) % desc.out_channels;
    const std::size_t g = o / cout;
    Acc* dst = out.plane(n, o);
    for (std::size_t c = 0; c < cin; ++c) {
      accumulate_plane(input.plane(n, g * cin + c), s.height, s.width,
                       weights.data().data() + (o * cin + c) * taps, desc.kernel_h,
                       desc.kernel_w, dst);
    }
    const Acc b = static_cast<Acc>(bias[o]);
    for (std::size_t k = 0; k < s.plane(); ++k) dst[k] += b;
  }
  return out;
}

}  // namespace detail

// out[n,o,y,x] = bias[o] + sum_{c,i,j} in[n,c,y+i-p,x+j-p] * w[o,c,i,j].
template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weights, std::span<const T> bias,
                 const ConvDescriptor& desc) {
  static_assert(std::is_floating_point_v<T>);
  return detail::grouped_conv<T, T, T, T>(input, weights, bias, desc);
}

template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weights, const std::vector<T>& bias,
                 const ConvDescriptor& desc) {
  return conv2d(input, weights, std::span<const T>(bias), desc);
}

// Inference-mode batch normalization with running statistics.
template <class T>
Tensor<T> batchnorm_apply(const Tensor<T>& input, const BatchNormParams& bn) {
  bn.validate();
  const Shape& s = input.shape();
  if (bn.channels() != s.channels) {
    throw ShapeError("batch norm has " + std::to_string(bn.channels()) + " channels, input has " +
                     std::to_string(s.channels));
  }
  Tensor<T> out(s);
  for (std::size_t n = 0; n < s.batch; ++n) {
    for (std::size_t c = 0; c < s.channels; ++c) {
      const T denom = std::sqrt(static_cast<T>(bn.running_var[c]) + static_cast<T>(bn.epsilon));
      const T gamma = bn.gamma[c];
      const T beta = bn.beta[c];
      const T mean = bn.running_mean[c];
      const T* src = input.plane(n, c);
      T* dst = out.plane(n, c);
      for (std::size_t k = 0; k < s.plane(); ++k) dst[k] = gamma * (src[k] - mean) / denom + beta;
    }
  }
  return out;
}

struct FoldedConv {
  Tensor<float> weights;
  std::vector<float> bias;
};

// Merges an inference batch norm into the preceding convolution.
inline FoldedConv fold_batchnorm(const Tensor<float>& weights, std::span<const float> bias,
                                 const BatchNormParams& bn) {
  bn.validate();
  const std::size_t out_ch = weights.shape().batch;
  if (bn.channels() != out_ch || bias.size() != out_ch) {
    throw ShapeError("batch norm channels do not match conv out_channels");
  }
  FoldedConv folded{weights, std::vector<float>(bias.begin(), bias.end())};
  const std::size_t per_out = weights.size() / std::max<std::size_t>(out_ch, 1);
  for (std::size_t o = 0; o < out_ch; ++o) {
    const double denom = std::sqrt(static_cast<double>(bn.running_var[o]) + bn.epsilon);
    if (!(denom > 0.0)) throw ValueError("batch norm variance plus epsilon is zero");
    const double factor = static_cast<double>(bn.gamma[o]) / denom;
    float* w = folded.weights.data().data() + o * per_out;
    for (std::size_t k = 0; k < per_out; ++k) {
      w[k] = static_cast<float>(static_cast<double>(w[k]) * factor);
    }
    folded.bias[o] = static_cast<float>(
        (static_cast<double>(bias[o]) - bn.running_mean[o]) * factor + bn.beta[o]);
  }
  return folded;
}

namespace detail {
template <class T, class F>
Tensor<T> map(const Tensor<T>& input, F f) {
  Tensor<T> out(input.shape());
  auto src = input.data();
  auto dst = out.data();
  for (std::size_t k = 0; k < src.size(); ++k) dst[k] = f(src[k]);
  return out;
}
}  // namespace detail

// Comparisons are written so NaN falls through unchanged.
template <class T>
constexpr T relu6(T x) {
  return x < T(0) ? T(0) : (x > T(6) ? T(6) : x);
}

template <class T>
constexpr T hardtanh01(T x) {
  return x < T(0) ? T(0) : (x > T(1) ? T(1) : x);
}

template <class T>
Tensor<T> relu6(const Tensor<T>& input) {
  return detail::map(input, [](T x) { return relu6(x); });
}

template <class T>
Tensor<T> hardtanh01(const Tensor<T>& input) {
  return detail::map(input, [](T x) { return hardtanh01(x); });
}

// Stacks channels of `a` followed by channels of `b`.
template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.batch != sb.batch || sa.height != sb.height || sa.width != sb.width) {
    throw ShapeError("concat inputs differ in batch or spatial size: " + sa.to_string() + " vs " +
                     sb.to_string());
  }
  Tensor<T> out({sa.batch, sa.channels + sb.channels, sa.height, sa.width});
  const std::size_t plane = sa.plane();
  for (std::size_t n = 0; n < sa.batch; ++n) {
    if (sa.channels > 0) std::copy_n(a.plane(n, 0), sa.channels * plane, out.plane(n, 0));
    if (sb.channels > 0) {
      std::copy_n(b.plane(n, 0), sb.channels * plane, out.plane(n, sa.channels));
    }
  }
  return out;
}

template <class T>
Tensor<T> add_residual(const Tensor<T>& a, const Tensor<T>& b) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError("residual add shape mismatch: " + a.shape().to_string() + " vs " +
                     b.shape().to_string());
  }
  Tensor<T> out(a.shape());
  auto x = a.data();
  auto y = b.data();
  auto dst = out.data();
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = x[k] + y[k];
  return out;
}

template <class To, class From>
Tensor<To> tensor_cast(const Tensor<From>& t) {
  std::vector<To> data(t.size());
  auto src = t.data();
  for (std::size_t k = 0; k < data.size(); ++k) data[k] = static_cast<To>(src[k]);
  return Tensor<To>(t.shape(), std::move(data));
}

}  // namespace holoq

#endif  // HOLOQ_TENSOR_HPP_
