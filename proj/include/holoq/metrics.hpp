#ifndef HOLOQ_METRICS_HPP_
#define HOLOQ_METRICS_HPP_

// Image quality and model-size metrics.
//
// PSNR and SSIM are evaluated on amplitude and on phase images. For these the
// phase is the normalized [0, 1] channel; hologram_loss takes phases in
// radians. No phase wrapping is applied anywhere.

#include <holoq/error.hpp>
#include <holoq/image.hpp>
#include <holoq/weight_store.hpp>

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace holoq {

inline double mse(const Image& a, const Image& b) {
  require_same_shape(a, b, "mse");
  if (a.size() == 0) throw ShapeError("mse of empty images");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a.pixels[k]) - static_cast<double>(b.pixels[k]);
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

// 10 log10(max^2 / MSE); +infinity for identical images.
inline double psnr(const Image& a, const Image& b, double max_value = 1.0) {
  if (!(max_value > 0.0)) throw ValueError("psnr max_value must be positive");
  const double e = mse(a, b);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_value * max_value / e);
}

struct SsimOptions {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

namespace detail {

inline std::vector<double> gaussian_kernel(std::size_t size, double sigma) {
  std::vector<double> k(size);
  const double c = (static_cast<double>(size) - 1.0) / 2.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - c;
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// 'valid' separable filtering: output is (h - n + 1) x (w - n + 1).
inline std::vector<double> filter_valid(const std::vector<double>& src, std::size_t w, std::size_t h,
                                        const std::vector<double>& k) {
  const std::size_t n = k.size();
  const std::size_t ow = w - n + 1;
  const std::size_t oh = h - n + 1;
  std::vector<double> rows(h * ow);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += k[i] * src[y * w + x + i];
      rows[y * ow + x] = s;
    }
  }
  std::vector<double> out(oh * ow);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += k[i] * rows[(y + i) * ow + x];
      out[y * ow + x] = s;
    }
  }
  return out;
}

}  // namespace detail

// Mean SSIM over all full windows (Gaussian 11x11, sigma 1.5, K1 = 0.01,
// K2 = 0.03, dynamic range = max_value).
inline double ssim(const Image& a, const Image& b, double max_value = 1.0, const SsimOptions& opt = {}) {
  require_same_shape(a, b, "ssim");
  if (a.width < opt.window || a.height < opt.window) {
    throw ShapeError("ssim needs images of at least " + std::to_string(opt.window) + "x" +
                     std::to_string(opt.window) + " pixels");
  }
  const auto k = detail::gaussian_kernel(opt.window, opt.sigma);
  const std::size_t w = a.width;
  const std::size_t h = a.height;
  std::vector<double> x(a.size()), y(a.size()), xx(a.size()), yy(a.size()), xy(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    x[i] = a.pixels[i];
    y[i] = b.pixels[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = detail::filter_valid(x, w, h, k);
  const auto my = detail::filter_valid(y, w, h, k);
  const auto sxx = detail::filter_valid(xx, w, h, k);
  const auto syy = detail::filter_valid(yy, w, h, k);
  const auto sxy = detail::filter_valid(xy, w, h, k);
  const double c1 = (opt.k1 * max_value) * (opt.k1 * max_value);
  const double c2 = (opt.k2 * max_value) * (opt.k2 * max_value);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double mxy = mx[i] * my[i];
    const double mx2 = mx[i] * mx[i];
    const double my2 = my[i] * my[i];
    const double vx = sxx[i] - mx2;
    const double vy = syy[i] - my2;
    const double cxy = sxy[i] - mxy;
    total += ((2.0 * mxy + c1) * (2.0 * cxy + c2)) / ((mx2 + my2 + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

// sum_n [ MSE(a_n, a^_n) + MSE(phi_n, phi^_n) / (2 pi) ], phases in radians.
inline double hologram_loss(std::span<const Image> target_amp, std::span<const Image> target_phase,
                            std::span<const Image> pred_amp, std::span<const Image> pred_phase) {
  const std::size_t n = target_amp.size();
  if (target_phase.size() != n || pred_amp.size() != n || pred_phase.size() != n) {
    throw ShapeError("hologram_loss: channel counts differ");
  }
  double loss = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    loss += mse(target_amp[c], pred_amp[c]) + mse(target_phase[c], pred_phase[c]) / (2.0 * std::numbers::pi);
  }
  return loss;
}

// Normalized [0, 1] phase channel -> radians in [-pi, pi).
inline Image phase01_to_radians(const Image& p) {
  Image out(p.width, p.height);
  for (std::size_t i = 0; i < p.size(); ++i) {
    out.pixels[i] = static_cast<float>((static_cast<double>(p.pixels[i]) - 0.5) * 2.0 * std::numbers::pi);
  }
  return out;
}

struct QualityReport {
  double psnr_amplitude = 0.0;
  double psnr_phase = 0.0;
  double ssim_amplitude = 0.0;
  double ssim_phase = 0.0;
};

// Metrics of b against reference a, averaged over color channels.
inline QualityReport quality_report(std::span<const Image> amp_a, std::span<const Image> phase_a,
                                    std::span<const Image> amp_b, std::span<const Image> phase_b) {
  const std::size_t n = amp_a.size();
  if (n == 0 || phase_a.size() != n || amp_b.size() != n || phase_b.size() != n) {
    throw ShapeError("quality_report: channel counts differ or are zero");
  }
  QualityReport r;
  for (std::size_t c = 0; c < n; ++c) {
    r.psnr_amplitude += psnr(amp_a[c], amp_b[c]);
    r.psnr_phase += psnr(phase_a[c], phase_b[c]);
    r.ssim_amplitude += ssim(amp_a[c], amp_b[c]);
    r.ssim_phase += ssim(phase_a[c], phase_b[c]);
  }
  const auto d = static_cast<double>(n);
  r.psnr_amplitude /= d;
  r.psnr_phase /= d;
  r.ssim_amplitude /= d;
  r.ssim_phase /= d;
  return r;
}

struct TensorSize {
  std::string name;
  ElemKind kind;
  std::size_t bytes;
};

struct SizeReport {
  std::size_t payload_bytes = 0;
  std::size_t manifest_bytes = 0;
  std::size_t file_bytes = 0;
  std::vector<TensorSize> tensors;
};

inline SizeReport size_report(const WeightStore& store) {
  SizeReport r;
  r.payload_bytes = store.payload.size();
  r.manifest_bytes = detail::serialize_manifest(store).size();
  r.file_bytes = 8 + r.manifest_bytes + r.payload_bytes;
  for (const auto& t : store.tensors) r.tensors.push_back({t.name, t.kind, t.length});
  return r;
}

// Payload bytes of the fp32 store for an architecture (weights, biases, BN).
inline std::size_t fp32_payload_bytes(const ArchitectureSpec& arch) {
  std::size_t floats = 0;
  for (const auto& l : arch.layers) {
    floats += l.conv.weight_shape().numel() + l.conv.out_channels;
    if (l.batch_norm) floats += 4 * l.conv.out_channels;
  }
  return floats * sizeof(float);
}

// Payload bytes of the int8-static store: INT8 weights and INT32 biases, BN
// folded away.
inline std::size_t int8_payload_bytes(const ArchitectureSpec& arch) {
  std::size_t bytes = 0;
  for (const auto& l : arch.layers) bytes += l.conv.weight_shape().numel() + l.conv.out_channels * sizeof(std::int32_t);
  return bytes;
}

}  // namespace holoq

#endif  // HOLOQ_METRICS_HPP_
