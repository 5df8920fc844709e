#ifndef HOLOQ_IMAGE_HPP_
#define HOLOQ_IMAGE_HPP_

#include <holoq/error.hpp>
#include <holoq/tensor.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace holoq {

// Single-channel float image, row-major.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(std::size_t w, std::size_t h, float fill = 0.0f) : width(w), height(h), pixels(w * h, fill) {}
  Image(std::size_t w, std::size_t h, std::vector<float> px) : width(w), height(h), pixels(std::move(px)) {
    if (pixels.size() != w * h) throw ShapeError("image pixel count does not match its dimensions");
  }

  float& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  float at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
  std::size_t size() const { return pixels.size(); }
  bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
  bool operator==(const Image&) const = default;
};

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": image sizes differ (" + std::to_string(a.width) + "x" +
                     std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" + std::to_string(b.height) + ")");
  }
}

inline Image channel_image(const Tensor<float>& t, std::size_t n, std::size_t c) {
  const Shape& s = t.shape();
  const float* p = t.plane(n, c);
  return Image(s.width, s.height, std::vector<float>(p, p + s.plane()));
}

// Channels [first, first + count) of batch item n.
inline std::vector<Image> channel_images(const Tensor<float>& t, std::size_t first, std::size_t count,
                                         std::size_t n = 0) {
  std::vector<Image> out;
  for (std::size_t c = first; c < first + count; ++c) out.push_back(channel_image(t, n, c));
  return out;
}

}  // namespace holoq

#endif  // HOLOQ_IMAGE_HPP_
