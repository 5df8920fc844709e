#ifndef HOLOQ_ARCH_HPP_
#define HOLOQ_ARCH_HPP_

// Layer table of the refined hologram CNN.
//
//   input (RGB-D, 4ch)
//     |-- stem: conv3x3 4->24, ReLU6
//     |   block[k] x N: conv3x3+BN, ReLU6, conv3x3+BN, +identity, ReLU6
//     |-- skip.dw: depthwise conv3x3 on the input + BN
//   concat(trunk 24ch, skip 4ch) = 28ch
//   head.dw: depthwise conv3x3 (28ch)
//   head.pw: pointwise conv1x1 28->6, Hardtanh [0,1]
//
// Output channels 0-2 are RGB amplitude, 3-5 RGB phase, all in [0, 1].

#include <holoq/error.hpp>
#include <holoq/tensor.hpp>

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace holoq {

enum class Activation { None, ReLU6, Hardtanh01 };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::None: return "none";
    case Activation::ReLU6: return "relu6";
    case Activation::Hardtanh01: return "hardtanh01";
  }
  return "?";
}

struct LayerSpec {
  std::string name;
  ConvDescriptor conv;
  bool batch_norm = false;
  Activation activation = Activation::None;

  bool operator==(const LayerSpec&) const = default;
};

struct ArchitectureConfig {
  std::size_t input_channels = 4;
  std::size_t trunk_channels = 24;
  std::size_t residual_blocks = 14;
  std::size_t output_channels = 6;
  std::size_t kernel = 3;
  float bn_epsilon = 1e-5f;

  bool operator==(const ArchitectureConfig&) const = default;
};

inline std::string block_name(std::size_t k, std::string_view part) {
  return "block" + std::to_string(k) + "." + std::string(part);
}

// Names of the quantized activations ("sites") in execution order.
namespace site {
inline constexpr std::string_view input = "input";
inline constexpr std::string_view concat = "concat";
inline std::string add(std::size_t k) { return block_name(k, "add"); }
}  // namespace site

struct ArchitectureSpec {
  std::string id;
  ArchitectureConfig config;
  std::vector<LayerSpec> layers;

  const LayerSpec& layer(std::string_view name) const {
    auto it = std::find_if(layers.begin(), layers.end(),
                           [&](const LayerSpec& l) { return l.name == name; });
    if (it == layers.end()) throw ValueError("architecture has no layer '" + std::string(name) + "'");
    return *it;
  }

  std::size_t concat_channels() const { return config.trunk_channels + config.input_channels; }

  // Full (non-grouped) convolutions with trunk_channels kernels.
  std::size_t trunk_conv_count() const {
    return static_cast<std::size_t>(std::count_if(layers.begin(), layers.end(), [&](const LayerSpec& l) {
      return l.conv.groups == 1 && l.conv.out_channels == config.trunk_channels;
    }));
  }

  // Every conv output is a site (named after the layer), plus the network
  // input, each residual add and the concat.
  std::vector<std::string> activation_sites() const {
    std::vector<std::string> sites{std::string(site::input), "stem"};
    for (std::size_t k = 0; k < config.residual_blocks; ++k) {
      sites.push_back(block_name(k, "conv1"));
      sites.push_back(block_name(k, "conv2"));
      sites.push_back(site::add(k));
    }
    sites.insert(sites.end(), {"skip.dw", std::string(site::concat), "head.dw", "head.pw"});
    return sites;
  }

  // The site whose codes feed a layer.
  std::string input_site(std::string_view layer_name) const {
    if (layer_name == "stem" || layer_name == "skip.dw") return std::string(site::input);
    if (layer_name == "head.dw") return std::string(site::concat);
    if (layer_name == "head.pw") return "head.dw";
    for (std::size_t k = 0; k < config.residual_blocks; ++k) {
      if (layer_name == block_name(k, "conv1")) return k == 0 ? "stem" : site::add(k - 1);
      if (layer_name == block_name(k, "conv2")) return block_name(k, "conv1");
    }
    throw ValueError("unknown layer '" + std::string(layer_name) + "'");
  }

  // Site holding the trunk output that enters the concat.
  std::string trunk_output_site() const {
    return config.residual_blocks == 0 ? "stem" : site::add(config.residual_blocks - 1);
  }

  bool operator==(const ArchitectureSpec&) const = default;
};

inline ArchitectureSpec build_arch(const ArchitectureConfig& cfg) {
  if (cfg.input_channels == 0 || cfg.trunk_channels == 0 || cfg.output_channels == 0 ||
      cfg.kernel % 2 == 0) {
    throw ValueError("invalid architecture configuration");
  }
  ArchitectureSpec spec;
  spec.config = cfg;
  spec.id = "refined-cgh/" + std::to_string(cfg.input_channels) + "-" + std::to_string(cfg.trunk_channels) +
            "x" + std::to_string(cfg.residual_blocks) + "-" + std::to_string(cfg.output_channels);
  const auto k = cfg.kernel;
  const auto t = cfg.trunk_channels;
  spec.layers.push_back({"stem", {cfg.input_channels, t, k, k, 1}, false, Activation::ReLU6});
  for (std::size_t b = 0; b < cfg.residual_blocks; ++b) {
    spec.layers.push_back({block_name(b, "conv1"), {t, t, k, k, 1}, true, Activation::ReLU6});
    spec.layers.push_back({block_name(b, "conv2"), {t, t, k, k, 1}, true, Activation::None});
  }
  const auto in = cfg.input_channels;
  spec.layers.push_back({"skip.dw", {in, in, k, k, in}, true, Activation::None});
  const auto cat = spec.concat_channels();
  spec.layers.push_back({"head.dw", {cat, cat, k, k, cat}, false, Activation::None});
  spec.layers.push_back({"head.pw", {cat, cfg.output_channels, 1, 1, 1}, false, Activation::Hardtanh01});
  return spec;
}

// 4 -> 24, fourteen residual blocks, 6 outputs: 29 trunk convolutions.
inline ArchitectureSpec build_reference_arch() { return build_arch(ArchitectureConfig{}); }

}  // namespace holoq

#endif  // HOLOQ_ARCH_HPP_
