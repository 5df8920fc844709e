#ifndef HOLOQ_FFT_HPP_
#define HOLOQ_FFT_HPP_

// Iterative radix-2 FFT, natural-order in and out. Both directions scale by
// 1/sqrt(N), so the transform is unitary and forward+inverse is unit gain.

#include <holoq/error.hpp>

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace holoq {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline void fft_inplace(std::span<std::complex<double>> data, bool inverse) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) throw ValueError("FFT length " + std::to_string(n) + " is not a power of two");
  if (n == 1) return;

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  const double sign = inverse ? 1.0 : -1.0;
  std::vector<std::complex<double>> twiddle(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    twiddle[k] = std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const auto t = twiddle[k * stride] * data[start + k + half];
        const auto u = data[start + k];
        data[start + k] = u + t;
        data[start + k + half] = u - t;
      }
    }
  }
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& v : data) v *= norm;
}

// 2-D transform of a row-major height x width array.
inline void fft2d_inplace(std::span<std::complex<double>> data, std::size_t width, std::size_t height,
                          bool inverse) {
  if (data.size() != width * height) throw ShapeError("fft2d: data size does not match dimensions");
  if (!is_power_of_two(width) || !is_power_of_two(height)) {
    throw ValueError("fft2d: dimensions " + std::to_string(width) + "x" + std::to_string(height) +
                     " are not powers of two");
  }
  for (std::size_t y = 0; y < height; ++y) fft_inplace(data.subspan(y * width, width), inverse);
  std::vector<std::complex<double>> column(height);
  for (std::size_t x = 0; x < width; ++x) {
    for (std::size_t y = 0; y < height; ++y) column[y] = data[y * width + x];
    fft_inplace(column, inverse);
    for (std::size_t y = 0; y < height; ++y) data[y * width + x] = column[y];
  }
}

}  // namespace holoq

#endif  // HOLOQ_FFT_HPP_
