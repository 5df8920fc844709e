// holoq: weight generation, quantization, inference, reconstruction,
// comparison and benchmarking for the hologram network.
//
// Exit codes: 0 success, 2 usage, 3 data or format error, 4 internal
// invariant violation.

#include "png_io.hpp"

#include <holoq/image.hpp>
#include <holoq/metrics.hpp>
#include <holoq/model.hpp>
#include <holoq/optics.hpp>
#include <holoq/random.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace holoq;

namespace {

constexpr std::uint64_t kDefaultSeed = 1;
constexpr std::size_t kDefaultCalibSamples = 8;

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Images

std::vector<Image> raster_channels(const png::Raster& r, int count) {
  std::vector<Image> out;
  const double scale = 1.0 / r.max_code();
  for (int c = 0; c < count; ++c) {
    Image img(r.width, r.height);
    for (std::size_t y = 0; y < r.height; ++y) {
      for (std::size_t x = 0; x < r.width; ++x) img.at(y, x) = static_cast<float>(r.at(y, x, c) * scale);
    }
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<Image> read_rgb(const fs::path& path) {
  const auto r = png::read(path);
  if (r.channels < 3) throw FormatError(path.string() + ": expected 3 color channels, found " + std::to_string(r.channels));
  return raster_channels(r, 3);
}

Image read_gray(const fs::path& path) {
  const auto r = png::read(path);
  if (r.channels > 2) throw FormatError(path.string() + ": depth map must be single-channel");
  return raster_channels(r, 1).front();
}

std::uint16_t to_code16(float v) {
  const double c = std::nearbyint(std::clamp(static_cast<double>(v), 0.0, 1.0) * 65535.0);
  return static_cast<std::uint16_t>(c);
}

png::Raster rgb16(const std::vector<Image>& channels) {
  png::Raster r;
  r.width = channels.at(0).width;
  r.height = channels.at(0).height;
  r.channels = 3;
  r.bit_depth = 16;
  r.samples.resize(r.width * r.height * 3);
  for (std::size_t i = 0; i < r.width * r.height; ++i) {
    for (std::size_t c = 0; c < 3; ++c) r.samples[3 * i + c] = to_code16(channels[c].pixels[i]);
  }
  return r;
}

Tensor<float> rgbd_tensor(const fs::path& rgb_path, const fs::path& depth_path) {
  const auto rgb = read_rgb(rgb_path);
  const auto depth = read_gray(depth_path);
  if (!rgb[0].same_shape(depth)) {
    throw ShapeError("RGB " + std::to_string(rgb[0].width) + "x" + std::to_string(rgb[0].height) +
                     " and depth " + std::to_string(depth.width) + "x" + std::to_string(depth.height) +
                     " differ in size");
  }
  Tensor<float> t(Shape{1, 4, depth.height, depth.width});
  for (std::size_t c = 0; c < 4; ++c) {
    const Image& src = c < 3 ? rgb[c] : depth;
    std::copy(src.pixels.begin(), src.pixels.end(), t.plane(0, c));
  }
  return t;
}

struct CalibPair {
  fs::path rgb;
  fs::path depth;
};

// <stem>.rgb.png with a matching <stem>.depth.png, sorted by stem.
std::vector<CalibPair> calibration_pairs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw FormatError("calibration directory " + dir.string() + " does not exist");
  std::map<std::string, CalibPair> found;
  const std::string suffix = ".rgb.png";
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (!e.is_regular_file() || name.size() <= suffix.size() || !name.ends_with(suffix)) continue;
    const std::string stem = name.substr(0, name.size() - suffix.size());
    const fs::path depth = dir / (stem + ".depth.png");
    if (fs::exists(depth)) found[stem] = {e.path(), depth};
  }
  std::vector<CalibPair> out;
  for (auto& [stem, p] : found) out.push_back(std::move(p));
  return out;
}

std::string json_number(double v) {
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string fmt(double v, int digits) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Commands

struct GenWeightsArgs {
  std::uint64_t seed = kDefaultSeed;
  fs::path out;
};

int gen_weights(const GenWeightsArgs& a) {
  const auto store = init_weights(build_reference_arch(), a.seed);
  save_weights(store, a.out);
  std::cout << "wrote " << a.out.string() << " (" << fs::file_size(a.out) << " bytes, seed " << a.seed << ")\n";
  return 0;
}

struct QuantizeArgs {
  fs::path weights;
  fs::path calib_dir;
  std::string mode = "static";
  std::size_t samples = kDefaultCalibSamples;
  fs::path out;
};

int quantize_cmd(const QuantizeArgs& a) {
  const auto fp32 = load_weights(a.weights);
  if (fp32.precision != Precision::FP32) throw FormatError("quantize needs an fp32 weight store");
  WeightStore out;
  if (a.mode == "static") {
    if (a.calib_dir.empty()) throw UsageError("static quantization needs --calib-dir");
    auto pairs = calibration_pairs(a.calib_dir);
    if (pairs.empty()) throw FormatError("no <stem>.rgb.png / <stem>.depth.png pairs in " + a.calib_dir.string());
    if (pairs.size() > a.samples) pairs.resize(a.samples);
    std::vector<Tensor<float>> inputs;
    for (const auto& p : pairs) inputs.push_back(rgbd_tensor(p.rgb, p.depth));
    out = convert_int8_static(fp32, calibrate(fp32, inputs));
    std::cout << "calibrated on " << inputs.size() << " sample(s)\n";
  } else {
    out = convert_int8_dynamic(fp32);
  }
  save_weights(out, a.out);
  const double ratio = static_cast<double>(out.payload.size()) / static_cast<double>(fp32.payload.size());
  std::cout << "wrote " << a.out.string() << " (" << to_string(out.precision) << ", payload " << out.payload.size()
            << " bytes, " << fmt(100.0 * ratio, 1) << "% of fp32)\n";
  return 0;
}

Tensor<float> run_model(const WeightStore& store, Precision precision, const Tensor<float>& input) {
  switch (precision) {
    case Precision::FP32:
      if (store.precision != Precision::FP32) throw FormatError("fp32 inference needs an fp32 weight store");
      return forward_fp32(store, input);
    case Precision::INT8Static:
      if (store.precision != Precision::INT8Static) {
        throw FormatError("int8-static inference needs a store produced by 'quantize --mode static'");
      }
      return forward_int8_static(store, input);
    case Precision::INT8Dynamic:
      return forward_int8_dynamic(store, input);
  }
  throw InvariantError("unhandled precision");
}

struct InferArgs {
  fs::path weights;
  fs::path rgb;
  fs::path depth;
  std::string precision = "fp32";
  fs::path out_amp;
  fs::path out_phase;
  fs::path reference;
};

int infer_cmd(const InferArgs& a) {
  const auto store = load_weights(a.weights);
  const auto precision = parse_precision(a.precision);
  const auto input = rgbd_tensor(a.rgb, a.depth);
  const auto out = run_model(store, precision, input);
  const auto amp = channel_images(out, 0, 3);
  const auto phase = channel_images(out, 3, 3);
  png::write(a.out_amp, rgb16(amp));
  png::write(a.out_phase, rgb16(phase));

  if (!a.reference.empty()) {
    const auto ref_store = load_weights(a.reference);
    const auto ref = run_model(ref_store, Precision::FP32, input);
    const auto q = quality_report(channel_images(ref, 0, 3), channel_images(ref, 3, 3), amp, phase);
    std::cerr << "psnr vs fp32: amplitude " << fmt(q.psnr_amplitude, 2) << " dB, phase " << fmt(q.psnr_phase, 2)
              << " dB\n";
  }
  return 0;
}

struct ReconstructArgs {
  fs::path amp;
  fs::path phase;
  double z_mm = kDefaultDistance * 1e3;
  std::vector<double> wavelengths_nm{kWavelengthRed * 1e9, kWavelengthGreen * 1e9, kWavelengthBlue * 1e9};
  double pitch_um = kDefaultPitch * 1e6;
  fs::path out;
};

int reconstruct_cmd(const ReconstructArgs& a) {
  if (a.wavelengths_nm.size() != 3) throw UsageError("--wavelengths needs exactly three values");
  const auto amp = read_rgb(a.amp);
  const auto phase = read_rgb(a.phase);
  if (!amp[0].same_shape(phase[0])) throw ShapeError("amplitude and phase images differ in size");
  const std::size_t w = amp[0].width;
  const std::size_t h = amp[0].height;
  const std::size_t pw = next_power_of_two(w);
  const std::size_t ph = next_power_of_two(h);
  const std::size_t ox = (pw - w) / 2;
  const std::size_t oy = (ph - h) / 2;
  const double pitch = a.pitch_um * 1e-6;
  const double z = a.z_mm * 1e-3;

  std::vector<Image> out;
  for (std::size_t c = 0; c < 3; ++c) {
    Image pa(pw, ph, 0.0f);
    Image pp(pw, ph, 0.5f);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        pa.at(y + oy, x + ox) = amp[c].at(y, x);
        pp.at(y + oy, x + ox) = phase[c].at(y, x);
      }
    }
    const auto field = field_from_amp_phase(pa, pp, pitch, a.wavelengths_nm[c] * 1e-9);
    const auto inten = intensity(asm_propagate(field, -z));
    Image crop(w, h);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) crop.at(y, x) = inten.at(y + oy, x + ox);
    }
    out.push_back(std::move(crop));
  }
  float peak = 0.0f;
  for (const auto& img : out) peak = std::max(peak, *std::max_element(img.pixels.begin(), img.pixels.end()));
  if (peak > 0.0f) {
    for (auto& img : out) {
      for (auto& v : img.pixels) v /= peak;
    }
  }
  auto r = rgb16(out);
  r.text = {{"holoq:z_mm", fmt(a.z_mm, 6)},
            {"holoq:pitch_um", fmt(a.pitch_um, 6)},
            {"holoq:padded", std::to_string(w) + "x" + std::to_string(h) + "->" + std::to_string(pw) + "x" +
                                 std::to_string(ph) + "+" + std::to_string(ox) + "+" + std::to_string(oy)},
            {"holoq:normalization", "global max = 1"}};
  png::write(a.out, r);
  return 0;
}

struct CompareArgs {
  fs::path a_amp;
  fs::path a_phase;
  fs::path b_amp;
  fs::path b_phase;
  fs::path json_out;
};

int compare_cmd(const CompareArgs& a) {
  const auto q = quality_report(read_rgb(a.a_amp), read_rgb(a.a_phase), read_rgb(a.b_amp), read_rgb(a.b_phase));
  std::cout << "            PSNR (dB)   SSIM\n"
            << "amplitude   " << fmt(q.psnr_amplitude, 2) << std::string(12 - fmt(q.psnr_amplitude, 2).size(), ' ')
            << fmt(q.ssim_amplitude, 4) << "\n"
            << "phase       " << fmt(q.psnr_phase, 2) << std::string(12 - fmt(q.psnr_phase, 2).size(), ' ')
            << fmt(q.ssim_phase, 4) << "\n";
  const std::string json = "{\"amplitude\":{\"psnr\":" + json_number(q.psnr_amplitude) +
                           ",\"ssim\":" + json_number(q.ssim_amplitude) + "},\"phase\":{\"psnr\":" +
                           json_number(q.psnr_phase) + ",\"ssim\":" + json_number(q.ssim_phase) + "}}";
  std::cout << json << "\n";
  if (!a.json_out.empty()) {
    std::ofstream f(a.json_out);
    if (!f) throw FormatError("cannot write " + a.json_out.string());
    f << json << "\n";
  }
  return 0;
}

struct BenchArgs {
  fs::path weights;
  std::string precision = "fp32";
  std::size_t width = 1280;
  std::size_t height = 720;
  std::size_t iters = 10;
  std::size_t warmup = 3;
  std::uint64_t seed = kDefaultSeed;
};

double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
}

int bench_cmd(const BenchArgs& a) {
  if (a.iters == 0) throw UsageError("--iters must be at least 1");
  const auto store = load_weights(a.weights);
  const auto precision = parse_precision(a.precision);
  Rng rng(a.seed);
  Tensor<float> input(Shape{1, 4, a.height, a.width});
  for (auto& v : input.data()) v = static_cast<float>(rng.uniform());

  // Model construction (weight loading, folding, quantization) stays
  // outside the timed region.
  std::function<Tensor<float>()> run;
  if (precision == Precision::FP32) {
    if (store.precision != Precision::FP32) throw FormatError("fp32 bench needs an fp32 weight store");
    auto net = std::make_shared<Network>(fold_network(network_from_store(store)));
    run = [net, &input] { return forward_fp32(*net, input); };
  } else if (precision == Precision::INT8Static) {
    auto model = std::make_shared<Int8StaticModel>(store);
    run = [model, &input] { return model->forward(input); };
  } else {
    auto model = std::make_shared<Int8DynamicModel>(store);
    run = [model, &input] { return model->forward(input); };
  }

  for (std::size_t i = 0; i < a.warmup; ++i) run();
  std::vector<double> ms;
  for (std::size_t i = 0; i < a.iters; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = run();
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  const double median = percentile(ms, 0.5);
  const double fp32_bytes = static_cast<double>(fp32_payload_bytes(store.arch));
  const double int8_bytes = static_cast<double>(int8_payload_bytes(store.arch));
  const double weight_bytes = precision == Precision::FP32 ? fp32_bytes : int8_bytes;

  std::cout << "precision      " << a.precision << "\n"
            << "resolution     " << a.width << "x" << a.height << " (batch 1)\n"
            << "iterations     " << a.iters << " after " << a.warmup << " warmup\n"
            << "median ms      " << fmt(median, 3) << "\n"
            << "p10 ms         " << fmt(percentile(ms, 0.1), 3) << "\n"
            << "p90 ms         " << fmt(percentile(ms, 0.9), 3) << "\n"
            << "fps            " << fmt(1000.0 / median, 3) << "\n"
            << "weight bytes   " << static_cast<std::size_t>(weight_bytes) << "\n"
            << "int8/fp32      " << fmt(int8_bytes / fp32_bytes, 4) << "\n";
  std::cout << "{\"precision\":\"" << a.precision << "\",\"width\":" << a.width << ",\"height\":" << a.height
            << ",\"iters\":" << a.iters << ",\"warmup\":" << a.warmup << ",\"median_ms\":" << json_number(median)
            << ",\"p10_ms\":" << json_number(percentile(ms, 0.1)) << ",\"p90_ms\":" << json_number(percentile(ms, 0.9))
            << ",\"fps\":" << json_number(1000.0 / median) << ",\"weight_bytes\":" << weight_bytes
            << ",\"int8_fp32_byte_ratio\":" << json_number(int8_bytes / fp32_bytes) << "}\n";
  return 0;
}

struct SynthArgs {
  std::uint64_t seed = kDefaultSeed;
  std::size_t width = 64;
  std::size_t height = 64;
  std::string prefix;
};

// A background gradient with a few flat discs at random depths.
int synth_cmd(const SynthArgs& a) {
  if (a.width == 0 || a.height == 0) throw UsageError("image dimensions must be positive");
  Rng rng(a.seed);
  const std::size_t n = a.width * a.height;
  std::vector<double> rgb(3 * n), depth(n);
  double base[3];
  for (auto& b : base) b = rng.uniform(0.1, 0.5);
  for (std::size_t y = 0; y < a.height; ++y) {
    for (std::size_t x = 0; x < a.width; ++x) {
      const double t = static_cast<double>(y) / static_cast<double>(a.height);
      for (std::size_t c = 0; c < 3; ++c) rgb[3 * (y * a.width + x) + c] = base[c] * (0.5 + t);
      depth[y * a.width + x] = 0.9 - 0.2 * t;
    }
  }
  const std::size_t discs = 3 + rng.below(4);
  const double span = static_cast<double>(std::min(a.width, a.height));
  for (std::size_t d = 0; d < discs; ++d) {
    const double cx = rng.uniform(0.0, static_cast<double>(a.width));
    const double cy = rng.uniform(0.0, static_cast<double>(a.height));
    const double radius = rng.uniform(0.08, 0.3) * span;
    const double z = rng.uniform(0.0, 0.8);
    double color[3];
    for (auto& c : color) c = rng.uniform(0.2, 1.0);
    for (std::size_t y = 0; y < a.height; ++y) {
      for (std::size_t x = 0; x < a.width; ++x) {
        const double dx = static_cast<double>(x) + 0.5 - cx;
        const double dy = static_cast<double>(y) + 0.5 - cy;
        if (dx * dx + dy * dy > radius * radius || depth[y * a.width + x] < z) continue;
        depth[y * a.width + x] = z;
        for (std::size_t c = 0; c < 3; ++c) rgb[3 * (y * a.width + x) + c] = color[c];
      }
    }
  }

  png::Raster color{a.width, a.height, 3, 8, std::vector<std::uint16_t>(3 * n), {}};
  png::Raster dmap{a.width, a.height, 1, 16, std::vector<std::uint16_t>(n), {}};
  for (std::size_t i = 0; i < 3 * n; ++i) {
    color.samples[i] = static_cast<std::uint16_t>(std::nearbyint(std::clamp(rgb[i], 0.0, 1.0) * 255.0));
  }
  for (std::size_t i = 0; i < n; ++i) {
    dmap.samples[i] = static_cast<std::uint16_t>(std::nearbyint(std::clamp(depth[i], 0.0, 1.0) * 65535.0));
  }
  png::write(a.prefix + ".rgb.png", color);
  png::write(a.prefix + ".depth.png", dmap);
  std::cout << "wrote " << a.prefix << ".rgb.png and " << a.prefix << ".depth.png\n";
  return 0;
}

struct PbmArgs {
  fs::path rgb;
  fs::path depth;
  fs::path out_amp;
  fs::path out_phase;
  double pitch_um = kDefaultPitch * 1e6;
  std::vector<double> wavelengths_nm{kWavelengthRed * 1e9, kWavelengthGreen * 1e9, kWavelengthBlue * 1e9};
  double z_near_mm = 3.0;
  double z_far_mm = 9.0;
  bool exact = false;
};

// Every pixel is a point at z = near + depth * (far - near); color channel c
// gives its amplitude at wavelength c.
int pbm_cmd(const PbmArgs& a) {
  if (a.wavelengths_nm.size() != 3) throw UsageError("--wavelengths needs exactly three values");
  if (!(a.z_near_mm > 0.0) || !(a.z_far_mm >= a.z_near_mm)) throw UsageError("need 0 < --z-near <= --z-far");
  const auto rgb = read_rgb(a.rgb);
  const auto depth = read_gray(a.depth);
  if (!rgb[0].same_shape(depth)) throw ShapeError("RGB and depth images differ in size");
  const std::size_t w = depth.width;
  const std::size_t h = depth.height;
  const double pitch = a.pitch_um * 1e-6;

  std::vector<ComplexField> fields;
  double peak = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<ScenePoint> points;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double amp = rgb[c].at(y, x);
        if (amp <= 0.0) continue;
        const double d = depth.at(y, x);
        points.push_back({pixel_coordinate(x, w, pitch), pixel_coordinate(y, h, pitch),
                          (a.z_near_mm + d * (a.z_far_mm - a.z_near_mm)) * 1e-3, amp});
      }
    }
    ComplexField f(w, h, pitch, a.wavelengths_nm[c] * 1e-9);
    if (!points.empty()) f = pbm_hologram(points, w, h, pitch, a.wavelengths_nm[c] * 1e-9, PbmOptions{!a.exact});
    for (const auto& v : f.values) peak = std::max(peak, std::abs(v));
    fields.push_back(std::move(f));
  }
  std::vector<Image> amp, phase;
  for (const auto& f : fields) {
    auto ap = to_amp_phase(f, peak > 0.0 ? peak : 1.0);
    amp.push_back(std::move(ap.amplitude));
    phase.push_back(std::move(ap.phase01));
  }
  png::write(a.out_amp, rgb16(amp));
  png::write(a.out_phase, rgb16(phase));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"holoq: FP32 and INT8 hologram network tools"};
  app.require_subcommand(1);
  const auto precisions = CLI::IsMember({"fp32", "int8-static", "int8-dynamic"});

  GenWeightsArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-weights", "Write a randomly initialised fp32 weight file");
  gen_cmd->add_option("--seed", gen.seed, "Initialisation seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output .holow file")->required();

  QuantizeArgs quant;
  auto* quant_cmd = app.add_subcommand("quantize", "Post-training static or dynamic INT8 quantization");
  quant_cmd->add_option("--weights", quant.weights, "fp32 .holow file")->required()->check(CLI::ExistingFile);
  quant_cmd->add_option("--calib-dir", quant.calib_dir, "Directory of <stem>.rgb.png / <stem>.depth.png pairs");
  quant_cmd->add_option("--mode", quant.mode, "static or dynamic")
      ->check(CLI::IsMember({"static", "dynamic"}))
      ->capture_default_str();
  quant_cmd->add_option("--samples", quant.samples, "Calibration samples (first N by name)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  quant_cmd->add_option("--out", quant.out, "Output .holow file")->required();

  InferArgs inf;
  auto* infer = app.add_subcommand("infer", "Run the network on an RGB-D image");
  infer->add_option("--weights", inf.weights, ".holow file")->required()->check(CLI::ExistingFile);
  infer->add_option("--rgb", inf.rgb, "8-bit RGB PNG")->required()->check(CLI::ExistingFile);
  infer->add_option("--depth", inf.depth, "8- or 16-bit single-channel PNG")->required()->check(CLI::ExistingFile);
  infer->add_option("--precision", inf.precision, "fp32, int8-static or int8-dynamic")
      ->check(precisions)
      ->capture_default_str();
  infer->add_option("--out-amp", inf.out_amp, "16-bit RGB amplitude PNG")->required();
  infer->add_option("--out-phase", inf.out_phase, "16-bit RGB phase PNG")->required();
  infer->add_option("--reference", inf.reference, "fp32 .holow; prints PSNR against it on stderr")
      ->check(CLI::ExistingFile);

  ReconstructArgs rec;
  auto* recon = app.add_subcommand("reconstruct", "Angular-spectrum reconstruction of an amplitude/phase hologram");
  recon->add_option("--amp", rec.amp, "Amplitude PNG (3 channels)")->required()->check(CLI::ExistingFile);
  recon->add_option("--phase", rec.phase, "Phase PNG (3 channels)")->required()->check(CLI::ExistingFile);
  recon->add_option("--z", rec.z_mm, "Distance in mm; positive reconstructs the scene side")->capture_default_str();
  recon->add_option("--wavelengths", rec.wavelengths_nm, "R,G,B wavelengths in nm")
      ->delimiter(',')
      ->expected(3)
      ->capture_default_str();
  recon->add_option("--pitch", rec.pitch_um, "Pixel pitch in um")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  recon->add_option("--out", rec.out, "16-bit RGB intensity PNG")->required();

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "PSNR/SSIM of hologram B against reference A");
  compare->add_option("--a-amp", cmp.a_amp)->required()->check(CLI::ExistingFile);
  compare->add_option("--a-phase", cmp.a_phase)->required()->check(CLI::ExistingFile);
  compare->add_option("--b-amp", cmp.b_amp)->required()->check(CLI::ExistingFile);
  compare->add_option("--b-phase", cmp.b_phase)->required()->check(CLI::ExistingFile);
  compare->add_option("--json", cmp.json_out, "Also write the JSON report here");

  BenchArgs bench;
  auto* bench_c = app.add_subcommand("bench", "Batch-1 latency of one precision");
  bench_c->add_option("--weights", bench.weights)->required()->check(CLI::ExistingFile);
  bench_c->add_option("--precision", bench.precision)->check(precisions)->capture_default_str();
  bench_c->add_option("--width", bench.width)->check(CLI::PositiveNumber)->capture_default_str();
  bench_c->add_option("--height", bench.height)->check(CLI::PositiveNumber)->capture_default_str();
  bench_c->add_option("--iters", bench.iters)->capture_default_str();
  bench_c->add_option("--warmup", bench.warmup)->capture_default_str();
  bench_c->add_option("--seed", bench.seed, "Input seed")->capture_default_str();

  SynthArgs syn;
  auto* synth = app.add_subcommand("synth", "Write a random RGB-D sample (<prefix>.rgb.png, <prefix>.depth.png)");
  synth->add_option("--seed", syn.seed)->capture_default_str();
  synth->add_option("--width", syn.width)->capture_default_str();
  synth->add_option("--height", syn.height)->capture_default_str();
  synth->add_option("--out-prefix", syn.prefix)->required();

  PbmArgs pbm;
  auto* pbm_c = app.add_subcommand("pbm", "Point-based hologram of an RGB-D image");
  pbm_c->add_option("--rgb", pbm.rgb)->required()->check(CLI::ExistingFile);
  pbm_c->add_option("--depth", pbm.depth)->required()->check(CLI::ExistingFile);
  pbm_c->add_option("--out-amp", pbm.out_amp)->required();
  pbm_c->add_option("--out-phase", pbm.out_phase)->required();
  pbm_c->add_option("--pitch", pbm.pitch_um, "Pixel pitch in um")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pbm_c->add_option("--wavelengths", pbm.wavelengths_nm, "R,G,B wavelengths in nm")
      ->delimiter(',')
      ->expected(3)
      ->capture_default_str();
  pbm_c->add_option("--z-near", pbm.z_near_mm, "Depth 0 maps here (mm)")->capture_default_str();
  pbm_c->add_option("--z-far", pbm.z_far_mm, "Full-scale depth maps here (mm)")->capture_default_str();
  pbm_c->add_flag("--exact", pbm.exact, "Keep aliased spherical-wave contributions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen_cmd) return gen_weights(gen);
    if (*quant_cmd) return quantize_cmd(quant);
    if (*infer) return infer_cmd(inf);
    if (*recon) return reconstruct_cmd(rec);
    if (*compare) return compare_cmd(cmp);
    if (*bench_c) return bench_cmd(bench);
    if (*synth) return synth_cmd(syn);
    if (*pbm_c) return pbm_cmd(pbm);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  } catch (const holoq::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
