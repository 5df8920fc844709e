#ifndef HOLOQ_WEIGHT_STORE_HPP_
#define HOLOQ_WEIGHT_STORE_HPP_

// Named tensors plus their quantization metadata, stored as one file:
//
//   [u64 little-endian manifest length][manifest: UTF-8 JSON][payload]
//
// The manifest ("format": "holow/1") carries the architecture, a tensor
// table (name, element kind, shape, offset, length, CRC-32, optional
// quantization parameters), activation-site parameters and the payload CRC.
// It also records a CRC-32 of its own bytes, computed with the value of the
// "manifest_crc32" field set to "00000000", so that any corrupted byte in the
// file is detected on load.

#include <holoq/arch.hpp>
#include <holoq/error.hpp>
#include <holoq/quant.hpp>
#include <holoq/tensor.hpp>

#include <json.hpp>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace holoq {

inline constexpr std::string_view kFormatVersion = "holow/1";

enum class Precision { FP32, INT8Static, INT8Dynamic };

inline const char* to_string(Precision p) {
  switch (p) {
    case Precision::FP32: return "fp32";
    case Precision::INT8Static: return "int8-static";
    case Precision::INT8Dynamic: return "int8-dynamic";
  }
  return "?";
}

inline Precision parse_precision(std::string_view s) {
  if (s == "fp32") return Precision::FP32;
  if (s == "int8-static") return Precision::INT8Static;
  if (s == "int8-dynamic") return Precision::INT8Dynamic;
  throw FormatError("unknown precision '" + std::string(s) + "'");
}

inline std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = ::crc32(crc, bytes.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

struct TensorRecord {
  std::string name;
  ElemKind kind = ElemKind::FP32;
  std::vector<std::size_t> dims;
  std::size_t offset = 0;
  std::size_t length = 0;
  std::uint32_t crc32 = 0;
  std::optional<QuantParams> qparams;

  std::size_t numel() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
  bool operator==(const TensorRecord&) const = default;
};

struct SiteParams {
  std::string site;
  QuantParams qparams;
  bool operator==(const SiteParams&) const = default;
};

class WeightStore {
 public:
  ArchitectureSpec arch;
  Precision precision = Precision::FP32;
  std::vector<TensorRecord> tensors;
  std::vector<SiteParams> activations;
  std::vector<std::uint8_t> payload;

  template <class T>
  void add(std::string name, std::vector<std::size_t> dims, std::span<const T> values,
           std::optional<QuantParams> qparams = std::nullopt) {
    if (contains(name)) throw ValueError("duplicate tensor '" + name + "'");
    TensorRecord rec{std::move(name), elem_kind_of<T>::value, std::move(dims), payload.size(),
                     values.size() * sizeof(T), 0, qparams};
    if (rec.numel() != values.size()) throw ShapeError("tensor '" + rec.name + "' dims disagree with data");
    payload.resize(payload.size() + rec.length);
    std::uint8_t* dst = payload.data() + rec.offset;
    for (const T& v : values) {
      store_le(v, dst);
      dst += sizeof(T);
    }
    rec.crc32 = crc32_of(std::span(payload).subspan(rec.offset, rec.length));
    tensors.push_back(std::move(rec));
  }

  template <class T>
  void add(std::string name, const Tensor<T>& t, std::optional<QuantParams> qparams = std::nullopt) {
    const Shape& s = t.shape();
    add(std::move(name), {s.batch, s.channels, s.height, s.width}, t.data(), qparams);
  }

  bool contains(std::string_view name) const {
    return std::any_of(tensors.begin(), tensors.end(), [&](const auto& r) { return r.name == name; });
  }

  const TensorRecord& record(std::string_view name) const {
    auto it = std::find_if(tensors.begin(), tensors.end(), [&](const auto& r) { return r.name == name; });
    if (it == tensors.end()) throw FormatError("weight store has no tensor '" + std::string(name) + "'");
    return *it;
  }

  template <class T>
  std::vector<T> values(std::string_view name) const {
    const auto& rec = record(name);
    if (rec.kind != elem_kind_of<T>::value) {
      throw FormatError("tensor '" + rec.name + "' is " + to_string(rec.kind) + ", expected " +
                        to_string(elem_kind_of<T>::value));
    }
    std::vector<T> out(rec.numel());
    const std::uint8_t* src = payload.data() + rec.offset;
    for (auto& v : out) {
      v = load_le<T>(src);
      src += sizeof(T);
    }
    return out;
  }

  template <class T>
  Tensor<T> tensor(std::string_view name) const {
    const auto& rec = record(name);
    if (rec.dims.size() != 4) throw FormatError("tensor '" + rec.name + "' is not 4-dimensional");
    return Tensor<T>({rec.dims[0], rec.dims[1], rec.dims[2], rec.dims[3]}, values<T>(name));
  }

  const QuantParams& site(std::string_view name) const {
    auto it = std::find_if(activations.begin(), activations.end(),
                           [&](const auto& s) { return s.site == name; });
    if (it == activations.end()) throw FormatError("weight store has no activation site '" + std::string(name) + "'");
    return it->qparams;
  }

  std::uint32_t checksum() const { return crc32_of(payload); }

  bool operator==(const WeightStore&) const = default;

 private:
  template <class T>
  static void store_le(T v, std::uint8_t* dst) {
    std::uint8_t bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(dst, bytes, sizeof(T));
  }
  template <class T>
  static T load_le(const std::uint8_t* src) {
    std::uint8_t bytes[sizeof(T)];
    std::memcpy(bytes, src, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    return v;
  }
};

namespace detail {

using ojson = nlohmann::ordered_json;

inline std::string float_to_decimal(float v) {
  char buf[48];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline float decimal_to_float(const std::string& s) {
  float v = 0.0f;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("malformed decimal '" + s + "'");
  }
  return v;
}

inline ojson qparams_to_json(const QuantParams& qp) {
  return ojson{{"scale", float_to_decimal(qp.scale)},
               {"zero_point", qp.zero_point},
               {"bits", qp.bits},
               {"scheme", to_string(qp.scheme)},
               {"range", {qp.range_min, qp.range_max}}};
}

inline QuantParams qparams_from_json(const ojson& j) {
  QuantParams qp;
  qp.scale = decimal_to_float(j.at("scale").get<std::string>());
  qp.zero_point = j.at("zero_point").get<std::int32_t>();
  qp.bits = j.at("bits").get<int>();
  qp.scheme = parse_scheme(j.at("scheme").get<std::string>());
  qp.range_min = j.at("range").at(0).get<float>();
  qp.range_max = j.at("range").at(1).get<float>();
  qp.validate();
  return qp;
}

inline ElemKind parse_elem_kind(std::string_view s) {
  if (s == "f32") return ElemKind::FP32;
  if (s == "i8") return ElemKind::INT8;
  if (s == "i32") return ElemKind::INT32;
  throw FormatError("unknown element kind '" + std::string(s) + "'");
}

inline Activation parse_activation(std::string_view s) {
  if (s == "none") return Activation::None;
  if (s == "relu6") return Activation::ReLU6;
  if (s == "hardtanh01") return Activation::Hardtanh01;
  throw FormatError("unknown activation '" + std::string(s) + "'");
}

inline constexpr std::string_view kCrcPlaceholder = "00000000";
inline constexpr std::string_view kCrcKey = "\"manifest_crc32\":\"";

inline ojson manifest_json(const WeightStore& store) {
  const auto& cfg = store.arch.config;
  ojson layers = ojson::array();
  for (const auto& l : store.arch.layers) {
    layers.push_back({{"name", l.name},
                      {"in", l.conv.in_channels},
                      {"out", l.conv.out_channels},
                      {"kernel", {l.conv.kernel_h, l.conv.kernel_w}},
                      {"groups", l.conv.groups},
                      {"batch_norm", l.batch_norm},
                      {"activation", to_string(l.activation)}});
  }
  ojson tensors = ojson::array();
  for (const auto& t : store.tensors) {
    ojson rec{{"name", t.name},
              {"dtype", to_string(t.kind)},
              {"shape", t.dims},
              {"offset", t.offset},
              {"length", t.length},
              {"crc32", t.crc32}};
    if (t.qparams) rec["qparams"] = qparams_to_json(*t.qparams);
    tensors.push_back(std::move(rec));
  }
  ojson sites = ojson::array();
  for (const auto& s : store.activations) {
    sites.push_back({{"site", s.site}, {"qparams", qparams_to_json(s.qparams)}});
  }
  ojson m;
  m["format"] = kFormatVersion;
  m["manifest_crc32"] = kCrcPlaceholder;
  m["precision"] = to_string(store.precision);
  m["architecture"] = {{"id", store.arch.id},
                       {"input_channels", cfg.input_channels},
                       {"trunk_channels", cfg.trunk_channels},
                       {"residual_blocks", cfg.residual_blocks},
                       {"output_channels", cfg.output_channels},
                       {"kernel", cfg.kernel},
                       {"bn_epsilon", cfg.bn_epsilon},
                       {"output_layout", "amplitude[r,g,b],phase[r,g,b]"},
                       {"phase_decoding", "phi = (p - 0.5) * 2pi"},
                       {"layers", std::move(layers)}};
  if (store.precision != Precision::FP32) {
    m["quantization"] = {{"weights", "int8 symmetric per-tensor"},
                         {"activations", store.precision == Precision::INT8Static
                                             ? "int8 asymmetric per-tensor, static"
                                             : "int8 asymmetric per-tensor, dynamic"},
                         {"bias", "int32, scale = S_x * S_w"},
                         {"calibration", "min-max envelope, sequential"},
                         {"rounding", "half-to-even"}};
  }
  m["tensors"] = std::move(tensors);
  m["activations"] = std::move(sites);
  m["payload"] = {{"length", store.payload.size()}, {"crc32", store.checksum()}};
  return m;
}

inline std::string hex8(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return buf;
}

inline std::string serialize_manifest(const WeightStore& store) {
  std::string text = manifest_json(store).dump();
  const auto pos = text.find(kCrcKey);
  const auto at = pos + kCrcKey.size();
  const auto crc = crc32_of(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  text.replace(at, kCrcPlaceholder.size(), hex8(crc));
  return text;
}

inline void verify_manifest_crc(std::string text) {
  const auto pos = text.find(kCrcKey);
  if (pos == std::string::npos) throw ChecksumError("manifest checksum field missing");
  const auto at = pos + kCrcKey.size();
  if (at + kCrcPlaceholder.size() > text.size()) throw ChecksumError("manifest checksum field truncated");
  const std::string stored = text.substr(at, kCrcPlaceholder.size());
  text.replace(at, kCrcPlaceholder.size(), kCrcPlaceholder);
  const auto crc = crc32_of(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  if (stored != hex8(crc)) throw ChecksumError("manifest checksum mismatch");
}

inline ArchitectureSpec arch_from_json(const ojson& a) {
  ArchitectureConfig cfg;
  cfg.input_channels = a.at("input_channels").get<std::size_t>();
  cfg.trunk_channels = a.at("trunk_channels").get<std::size_t>();
  cfg.residual_blocks = a.at("residual_blocks").get<std::size_t>();
  cfg.output_channels = a.at("output_channels").get<std::size_t>();
  cfg.kernel = a.at("kernel").get<std::size_t>();
  cfg.bn_epsilon = a.at("bn_epsilon").get<float>();
  ArchitectureSpec spec = build_arch(cfg);
  // The layer table is redundant with the config; it must agree.
  const auto& layers = a.at("layers");
  if (layers.size() != spec.layers.size()) throw FormatError("architecture layer count mismatch");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    LayerSpec got{l.at("name").get<std::string>(),
                  {l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(),
                   l.at("kernel").at(0).get<std::size_t>(), l.at("kernel").at(1).get<std::size_t>(),
                   l.at("groups").get<std::size_t>()},
                  l.at("batch_norm").get<bool>(),
                  parse_activation(l.at("activation").get<std::string>())};
    if (!(got == spec.layers[k])) throw FormatError("architecture layer '" + got.name + "' mismatch");
  }
  if (a.at("id").get<std::string>() != spec.id) throw FormatError("architecture id mismatch");
  return spec;
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize(const WeightStore& store) {
  const std::string manifest = detail::serialize_manifest(store);
  std::vector<std::uint8_t> bytes(8 + manifest.size() + store.payload.size());
  std::uint64_t len = manifest.size();
  for (int k = 0; k < 8; ++k) bytes[k] = static_cast<std::uint8_t>(len >> (8 * k));
  std::memcpy(bytes.data() + 8, manifest.data(), manifest.size());
  if (!store.payload.empty()) {
    std::memcpy(bytes.data() + 8 + manifest.size(), store.payload.data(), store.payload.size());
  }
  return bytes;
}

inline WeightStore deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw FormatError("weight file truncated: no manifest length");
  std::uint64_t len = 0;
  for (int k = 0; k < 8; ++k) len |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
  if (len > bytes.size() - 8) throw FormatError("weight file truncated: manifest incomplete");
  std::string text(reinterpret_cast<const char*>(bytes.data() + 8), len);
  detail::ojson m;
  try {
    m = detail::ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
  }
  try {
    if (!m.is_object() || m.value("format", std::string()) != kFormatVersion) {
      throw FormatError("unknown manifest version (expected " + std::string(kFormatVersion) + ")");
    }
    detail::verify_manifest_crc(std::move(text));

    WeightStore store;
    store.precision = parse_precision(m.at("precision").get<std::string>());
    store.arch = detail::arch_from_json(m.at("architecture"));

    const auto payload_len = m.at("payload").at("length").get<std::size_t>();
    const auto rest = bytes.size() - 8 - len;
    if (rest < payload_len) throw FormatError("weight file truncated: payload incomplete");
    if (rest > payload_len) throw FormatError("weight file has trailing bytes after the payload");
    store.payload.assign(bytes.begin() + 8 + static_cast<std::ptrdiff_t>(len), bytes.end());
    if (store.checksum() != m.at("payload").at("crc32").get<std::uint32_t>()) {
      throw ChecksumError("payload checksum mismatch");
    }

    std::size_t expected_offset = 0;
    for (const auto& t : m.at("tensors")) {
      TensorRecord rec;
      rec.name = t.at("name").get<std::string>();
      rec.kind = detail::parse_elem_kind(t.at("dtype").get<std::string>());
      rec.dims = t.at("shape").get<std::vector<std::size_t>>();
      rec.offset = t.at("offset").get<std::size_t>();
      rec.length = t.at("length").get<std::size_t>();
      rec.crc32 = t.at("crc32").get<std::uint32_t>();
      if (t.contains("qparams")) rec.qparams = detail::qparams_from_json(t.at("qparams"));
      if (rec.offset != expected_offset) throw FormatError("tensor '" + rec.name + "' offset is not contiguous");
      if (rec.length != rec.numel() * elem_size(rec.kind)) {
        throw FormatError("tensor '" + rec.name + "' length disagrees with its shape");
      }
      if (rec.offset + rec.length > store.payload.size()) {
        throw FormatError("tensor '" + rec.name + "' extends past the payload");
      }
      if (crc32_of(std::span(store.payload).subspan(rec.offset, rec.length)) != rec.crc32) {
        throw ChecksumError("tensor '" + rec.name + "' checksum mismatch");
      }
      expected_offset = rec.offset + rec.length;
      store.tensors.push_back(std::move(rec));
    }
    if (expected_offset != store.payload.size()) throw FormatError("payload has unaccounted bytes");
    for (const auto& s : m.at("activations")) {
      store.activations.push_back(
          {s.at("site").get<std::string>(), detail::qparams_from_json(s.at("qparams"))});
    }
    return store;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  } catch (const ValueError& e) {
    throw FormatError(std::string("invalid manifest value: ") + e.what());
  }
}

inline void save_weights(const WeightStore& store, const std::filesystem::path& path) {
  const auto bytes = serialize(store);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

inline WeightStore load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open weight file '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace holoq

#endif  // HOLOQ_WEIGHT_STORE_HPP_
