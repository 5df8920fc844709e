#ifndef HOLOQ_OPTICS_HPP_
#define HOLOQ_OPTICS_HPP_

// Scalar wave optics used to check holograms: complex fields, point-based
// hologram synthesis with exact spherical waves, and angular-spectrum
// propagation.
//
// Pixel (row y, column x) of a W x H field sits at
// ((x - W/2) * pitch, (y - H/2) * pitch) in the hologram plane.

#include <holoq/error.hpp>
#include <holoq/fft.hpp>
#include <holoq/image.hpp>

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace holoq {

inline constexpr double kDefaultPitch = 8.0e-6;
inline constexpr double kDefaultDistance = 6.0e-3;
inline constexpr double kWavelengthRed = 638e-9;
inline constexpr double kWavelengthGreen = 520e-9;
inline constexpr double kWavelengthBlue = 450e-9;

struct ComplexField {
  std::size_t width = 0;
  std::size_t height = 0;
  double pitch = kDefaultPitch;
  double wavelength = kWavelengthGreen;
  std::vector<std::complex<double>> values;

  ComplexField() = default;
  ComplexField(std::size_t w, std::size_t h, double pitch_m, double wavelength_m)
      : width(w), height(h), pitch(pitch_m), wavelength(wavelength_m), values(w * h) {}

  std::complex<double>& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
  const std::complex<double>& at(std::size_t y, std::size_t x) const { return values[y * width + x]; }

  void validate() const {
    if (!(pitch > 0.0)) throw ValueError("field pitch must be positive");
    if (!(wavelength > 0.0)) throw ValueError("field wavelength must be positive");
    if (values.size() != width * height) throw ShapeError("field value count does not match its dimensions");
  }

  double energy() const {
    double e = 0.0;
    for (const auto& v : values) e += std::norm(v);
    return e;
  }
};

struct ScenePoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double amplitude = 1.0;
};

inline double pixel_coordinate(std::size_t index, std::size_t count, double pitch) {
  return (static_cast<double>(index) - static_cast<double>(count) / 2.0) * pitch;
}

// amp * exp(i (phase01 - 0.5) 2 pi)
inline ComplexField field_from_amp_phase(const Image& amp, const Image& phase01, double pitch, double wavelength) {
  require_same_shape(amp, phase01, "field_from_amp_phase");
  ComplexField f(amp.width, amp.height, pitch, wavelength);
  f.validate();
  for (std::size_t i = 0; i < amp.size(); ++i) {
    const double phi = (static_cast<double>(phase01.pixels[i]) - 0.5) * 2.0 * std::numbers::pi;
    f.values[i] = std::polar(static_cast<double>(amp.pixels[i]), phi);
  }
  return f;
}

inline Image intensity(const ComplexField& field) {
  Image out(field.width, field.height);
  for (std::size_t i = 0; i < field.values.size(); ++i) out.pixels[i] = static_cast<float>(std::norm(field.values[i]));
  return out;
}

// Amplitude scaled by 1/amp_scale and phase mapped to [0, 1).
struct AmpPhase {
  Image amplitude;
  Image phase01;
};

inline AmpPhase to_amp_phase(const ComplexField& field, double amp_scale) {
  AmpPhase out{Image(field.width, field.height), Image(field.width, field.height)};
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    out.amplitude.pixels[i] = static_cast<float>(std::abs(field.values[i]) / amp_scale);
    double p = std::arg(field.values[i]) / (2.0 * std::numbers::pi) + 0.5;  // arg in [-pi, pi]
    if (p >= 1.0) p -= 1.0;
    out.phase01.pixels[i] = static_cast<float>(p);
  }
  return out;
}

// Angular spectrum transfer function in natural FFT order:
//   H = exp(i 2 pi z sqrt(1/lambda^2 - fx^2 - fy^2)), 0 beyond the
//   evanescent cutoff.
inline std::vector<std::complex<double>> asm_transfer_function(std::size_t width, std::size_t height, double pitch,
                                                               double wavelength, double z) {
  std::vector<std::complex<double>> h(width * height);
  const double inv_l2 = 1.0 / (wavelength * wavelength);
  auto freq = [pitch](std::size_t k, std::size_t n) {
    const auto ks = static_cast<double>(k);
    const auto ns = static_cast<double>(n);
    return (k < n / 2 ? ks : ks - ns) / (ns * pitch);
  };
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = freq(y, height);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = freq(x, width);
      const double arg = inv_l2 - fx * fx - fy * fy;
      h[y * width + x] = arg >= 0.0 ? std::polar(1.0, 2.0 * std::numbers::pi * z * std::sqrt(arg))
                                    : std::complex<double>(0.0, 0.0);
    }
  }
  return h;
}

// Propagates by z metres (negative z propagates backwards).
inline ComplexField asm_propagate(const ComplexField& field, double z) {
  field.validate();
  if (!is_power_of_two(field.width) || !is_power_of_two(field.height)) {
    throw ValueError("asm_propagate needs power-of-two dimensions, got " + std::to_string(field.width) + "x" +
                     std::to_string(field.height));
  }
  ComplexField out = field;
  fft2d_inplace(out.values, out.width, out.height, false);
  const auto h = asm_transfer_function(field.width, field.height, field.pitch, field.wavelength, z);
  for (std::size_t i = 0; i < h.size(); ++i) out.values[i] *= h[i];
  fft2d_inplace(out.values, out.width, out.height, true);
  return out;
}

struct PbmOptions {
  // Drop each point's contribution wherever its local fringe frequency
  // exceeds the grid's Nyquist limit along x or y (|dx| > lambda r / (2 pitch)).
  // Without this, a coarse grid aliases the spherical wave into replica
  // foci spaced lambda z / pitch apart.
  bool alias_free = false;
};

// Sum of spherical waves (a_j / r_j) exp(i 2 pi r_j / lambda), no occlusion.
inline ComplexField pbm_hologram(std::span<const ScenePoint> points, std::size_t width, std::size_t height,
                                 double pitch, double wavelength, const PbmOptions& opt = {}) {
  if (points.empty()) throw ValueError("pbm_hologram needs at least one point");
  for (const auto& p : points) {
    if (!(p.z > 0.0)) throw ValueError("pbm_hologram: scene points must lie in front of the hologram (z > 0)");
  }
  ComplexField f(width, height, pitch, wavelength);
  f.validate();
  const double k = 2.0 * std::numbers::pi / wavelength;
  const double zone = wavelength / (2.0 * pitch);
  for (std::size_t y = 0; y < height; ++y) {
    const double py = pixel_coordinate(y, height, pitch);
    for (std::size_t x = 0; x < width; ++x) {
      const double px = pixel_coordinate(x, width, pitch);
      std::complex<double> acc(0.0, 0.0);
      for (const auto& p : points) {
        const double dx = px - p.x;
        const double dy = py - p.y;
        const double r = std::sqrt(dx * dx + dy * dy + p.z * p.z);
        if (opt.alias_free && (std::fabs(dx) > zone * r || std::fabs(dy) > zone * r)) continue;
        acc += std::polar(p.amplitude / r, k * r);
      }
      f.at(y, x) = acc;
    }
  }
  return f;
}

}  // namespace holoq

#endif  // HOLOQ_OPTICS_HPP_
