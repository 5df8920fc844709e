#ifndef HOLOQ_TESTS_SUPPORT_HPP_
#define HOLOQ_TESTS_SUPPORT_HPP_

#include <holoq/metrics.hpp>
#include <holoq/model.hpp>
#include <holoq/random.hpp>

#include <cstdint>
#include <vector>

namespace support {

// RGB-D style input: channels uniform in [0, 1].
inline holoq::Tensor<float> random_input(std::uint64_t seed, std::size_t h, std::size_t w) {
  holoq::Rng rng(seed);
  holoq::Tensor<float> t(holoq::Shape{1, 4, h, w});
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform());
  return t;
}

// PSNR over all channels of two same-shape tensors, unit peak.
inline double psnr(const holoq::Tensor<float>& a, const holoq::Tensor<float>& b) {
  const auto& s = a.shape();
  holoq::Image ia(s.width, s.numel() / s.width, a.storage());
  holoq::Image ib(s.width, s.numel() / s.width, b.storage());
  return holoq::psnr(ia, ib);
}

inline holoq::ArchitectureSpec small_arch(std::size_t trunk = 8, std::size_t blocks = 2) {
  holoq::ArchitectureConfig cfg;
  cfg.trunk_channels = trunk;
  cfg.residual_blocks = blocks;
  return holoq::build_arch(cfg);
}

}  // namespace support

#endif  // HOLOQ_TESTS_SUPPORT_HPP_
