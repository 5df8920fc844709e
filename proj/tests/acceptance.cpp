// Acceptance harness: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include "cli_runner.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <holoq/metrics.hpp>
#include <holoq/model.hpp>
#include <holoq/optics.hpp>
#include <holoq/quant.hpp>
#include <holoq/weight_store.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace holoq;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v, int digits = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

struct RangeConfig {
  float alpha;
  float beta;
};

std::vector<RangeConfig> range_configs() {
  Rng rng(20240501);
  std::vector<RangeConfig> out;
  while (out.size() < 100) {
    const double width = std::pow(10.0, rng.uniform(-3.0, 3.0));
    const auto alpha = static_cast<float>(rng.uniform(-1.5, 0.5) * width);
    const auto beta = static_cast<float>(double(alpha) + width);
    const double actual = double(beta) - double(alpha);
    if (actual < 1e-3 || actual > 1e3) continue;
    out.push_back({alpha, beta});
  }
  return out;
}

Outcome quantization_roundtrip() {
  const auto t0 = Clock::now();
  Rng rng(7);
  std::size_t bad = 0;
  double worst = 0.0;
  for (const auto& c : range_configs()) {
    const auto qp = make_qparams(c.alpha, c.beta, 8, Scheme::Asymmetric);
    for (int i = 0; i < 10000; ++i) {
      const auto x = static_cast<float>(rng.uniform(c.alpha, c.beta));
      const double back = dequantize_value<float>(quantize_value(x, qp), qp);
      const double err = std::fabs(double(x) - back);
      const double bound = qp.scale / 2.0 + 1e-7 * std::fabs(x);
      worst = std::max(worst, err / bound);
      if (err > bound) ++bad;
    }
  }
  const double t = seconds_since(t0);
  return {bad == 0 && t < 1.0,
          std::to_string(bad) + " violations, worst err/bound " + num(worst) + ", " + num(t) + " s"};
}

Outcome endpoint_mapping() {
  std::size_t bad = 0;
  for (const auto& c : range_configs()) {
    const auto qp = make_qparams(c.alpha, c.beta, 8, Scheme::Asymmetric);
    if (quantize_value(c.alpha, qp) != -128 || quantize_value(c.beta, qp) != 127) ++bad;
  }
  return {bad == 0, std::to_string(bad) + " of 100 ranges miss -128/127"};
}

Outcome integer_kernel_oracle() {
  const auto t0 = Clock::now();
  Rng rng(11);
  std::size_t differing = 0;
  const ConvDescriptor d{4, 24, 3, 3, 1};
  for (int trial = 0; trial < 100; ++trial) {
    const auto lo = static_cast<float>(rng.uniform(-2.0, 1.0));
    const auto in_qp = make_qparams(lo, lo + static_cast<float>(rng.uniform(0.05, 5.0)), 8, Scheme::Asymmetric);
    const auto wm = static_cast<float>(rng.uniform(0.01, 2.0));
    const auto w_qp = make_qparams(-wm, wm, 8, Scheme::Symmetric);
    const auto olo = static_cast<float>(rng.uniform(-8.0, 0.5));
    const auto out_qp = make_qparams(olo, olo + static_cast<float>(rng.uniform(0.2, 12.0)), 8, Scheme::Asymmetric);

    Tensor<std::int8_t> xq(Shape{1, 4, 16, 16}), wq(d.weight_shape());
    for (auto& v : xq.data()) v = static_cast<std::int8_t>(static_cast<int>(rng.below(256)) - 128);
    for (auto& v : wq.data()) v = static_cast<std::int8_t>(static_cast<int>(rng.below(255)) - 127);
    std::vector<float> bias_f(24);
    for (auto& b : bias_f) b = static_cast<float>(rng.uniform(-1.0, 1.0));
    const auto bias = quantize_bias(bias_f, in_qp.scale, w_qp.scale);
    const bool relu = trial % 2 == 1;
    const auto clamp = relu ? activation_clamp(out_qp, 0.0f, 6.0f) : full_range(out_qp);
    const auto y = qconv2d({xq, in_qp}, wq, w_qp, bias, out_qp, d, clamp);

    std::vector<double> xd(xq.size()), wd(wq.size()), bd(24);
    for (std::size_t k = 0; k < xd.size(); ++k) xd[k] = oracle::dequantize(xq.data()[k], in_qp.scale, in_qp.zero_point);
    for (std::size_t k = 0; k < wd.size(); ++k) wd[k] = oracle::dequantize(wq.data()[k], w_qp.scale, 0);
    for (std::size_t o = 0; o < 24; ++o) bd[o] = double(bias[o]) * (double(in_qp.scale) * double(w_qp.scale));
    const auto ref = oracle::conv2d(xq.shape(), xd, 24, 3, 3, 1, wd, bd);
    for (std::size_t k = 0; k < ref.size(); ++k) {
      const double v = relu ? std::clamp(ref[k], 0.0, 6.0) : ref[k];
      if (y.codes.data()[k] != oracle::quantize(v, out_qp.scale, out_qp.zero_point)) ++differing;
    }
  }
  const double t = seconds_since(t0);
  return {differing == 0 && t < 10.0, std::to_string(differing) + " differing codes, " + num(t) + " s"};
}

Outcome end_to_end_static_equivalence() {
  const auto t0 = Clock::now();
  std::size_t differing = 0;
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto fp32 = init_weights(build_reference_arch(), seed);
    const std::vector<Tensor<float>> calib{support::random_input(1000 + seed, 64, 64)};
    const auto q = convert_int8_static(fp32, calibrate(fp32, calib));
    const auto x = support::random_input(2000 + seed, 64, 64);
    const auto codes = Int8StaticModel(q).forward_codes(x).codes;
    const auto sim = simulate_int8_static_codes(q, x);
    for (std::size_t k = 0; k < codes.size(); ++k) differing += codes.data()[k] != sim.data()[k];
  }
  const double t = seconds_since(t0);
  return {differing == 0 && t < 120.0, std::to_string(differing) + " differing codes over 25 models, " + num(t, 1) + " s"};
}

Outcome dynamic_static_coincidence() {
  std::size_t mismatched = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto fp32 = init_weights(build_reference_arch(), 100 + seed);
    const auto x = support::random_input(3000 + seed, 32, 32);
    const auto q = convert_int8_static(fp32, calibrate(fp32, std::vector<Tensor<float>>{x}));
    if (!(Int8StaticModel(q).forward(x) == Int8DynamicModel(fp32).forward(x))) ++mismatched;
  }
  return {mismatched == 0, std::to_string(mismatched) + " of 10 seeds differ"};
}

Outcome size_reduction() {
  const auto fp32 = init_weights(build_reference_arch(), 1);
  const auto q = convert_int8_static(fp32, calibrate(fp32, std::vector<Tensor<float>>{support::random_input(5, 32, 32)}));
  const auto f = size_report(fp32), i = size_report(q);
  const double payload_ratio = double(i.payload_bytes) / double(f.payload_bytes);
  const double file_ratio = double(i.file_bytes) / double(f.file_bytes);
  return {payload_ratio <= 0.30 && file_ratio <= 0.35,
          "payload " + std::to_string(i.payload_bytes) + "/" + std::to_string(f.payload_bytes) + " = " +
              num(payload_ratio, 4) + ", file " + std::to_string(i.file_bytes) + "/" + std::to_string(f.file_bytes) +
              " = " + num(file_ratio, 4)};
}

Outcome architecture_audit() {
  const auto a = build_reference_arch();
  std::size_t trunk = 0, skip = 0, separable = 0;
  for (const auto& l : a.layers) {
    if (l.conv.groups == 1 && l.conv.out_channels == 24 && l.conv.kernel_h == 3) ++trunk;
    if (l.conv.depthwise() && l.conv.in_channels == 4 && l.batch_norm) ++skip;
  }
  const auto& dw = a.layer("head.dw");
  const auto& pw = a.layer("head.pw");
  if (dw.conv.depthwise() && dw.conv.in_channels == 28 && pw.conv.kernel_h == 1 && pw.conv.in_channels == 28) {
    ++separable;
  }
  const bool ok = trunk == 29 && skip == 1 && separable == 1 && pw.conv.out_channels == 6;
  return {ok, "trunk " + std::to_string(trunk) + ", skip depthwise+BN " + std::to_string(skip) + ", separable head " +
                  std::to_string(separable) + ", outputs " + std::to_string(pw.conv.out_channels)};
}

Outcome asm_unitarity() {
  const auto t0 = Clock::now();
  const std::size_t n = 128;
  const double pitch = 8e-6, lambda = 520e-9;
  Rng rng(13);
  ComplexField f(n, n, pitch, lambda);
  for (auto& v : f.values) v = {rng.normal(), rng.normal()};
  fft2d_inplace(f.values, n, n, false);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double fy = (y < n / 2 ? double(y) : double(y) - double(n)) / (double(n) * pitch);
      const double fx = (x < n / 2 ? double(x) : double(x) - double(n)) / (double(n) * pitch);
      if (fx * fx + fy * fy > 0.81 / (lambda * lambda)) f.at(y, x) = 0.0;
    }
  }
  fft2d_inplace(f.values, n, n, true);
  const auto fwd = asm_propagate(f, 6e-3);
  const auto back = asm_propagate(fwd, -6e-3);
  double num_e = 0.0, den = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    num_e += std::norm(back.values[i] - f.values[i]);
    den += std::norm(f.values[i]);
  }
  const double rel = std::sqrt(num_e / den);
  const double drift = std::fabs(fwd.energy() - f.energy()) / f.energy();
  const double t = seconds_since(t0);
  std::ostringstream os;
  os << "rms rel " << rel << ", energy drift " << drift << ", " << num(t) << " s";
  return {rel <= 1e-6 && drift <= 1e-10 && t < 1.0, os.str()};
}

Outcome pbm_focus() {
  const std::size_t n = 128;
  const double pitch = 8e-6, lambda = 520e-9;
  int hits = 0;
  for (double z : {3e-3, 6e-3, 9e-3, 12e-3}) {
    for (auto [px, py] : {std::pair{0.0, 0.0}, {0.2e-3, -0.3e-3}, {-0.2e-3, 0.3e-3}}) {
      const ScenePoint p{px, py, z, 1.0};
      const auto img = intensity(asm_propagate(pbm_hologram(std::span(&p, 1), n, n, pitch, lambda, PbmOptions{true}), -z));
      std::size_t best = 0;
      for (std::size_t i = 1; i < img.size(); ++i) {
        if (img.pixels[i] > img.pixels[best]) best = i;
      }
      const double ex = px / pitch + double(n) / 2.0, ey = py / pitch + double(n) / 2.0;
      if (std::fabs(double(best % n) - ex) <= 1.0 && std::fabs(double(best / n) - ey) <= 1.0) ++hits;
    }
  }
  return {hits == 12, std::to_string(hits) + " of 12 cases focus within 1 px"};
}

Outcome metrics_oracles() {
  Rng rng(17);
  const auto x = oracle::random_image(rng, 32, 32);
  const double s = ssim(x, x);
  Image a(32, 32, 0.3f), b(32, 32, 0.4f);
  const double p = psnr(a, b);
  Image zero(8, 8, 0.0f), amp(8, 8, 0.2f), phase(8, 8);
  const double root = std::sqrt(2.0 * std::numbers::pi);
  for (std::size_t k = 0; k < phase.size(); ++k) phase.pixels[k] = static_cast<float>(k % 2 ? root : -root);
  const std::vector<Image> ta{zero}, tp{zero}, pa{amp}, pp{phase};
  const double l = hologram_loss(ta, tp, pa, pp);
  const bool ok = s == 1.0 && std::fabs(p - 20.0) <= 1e-3 && std::fabs(l - 1.04) <= 1e-6;
  return {ok, "ssim " + num(s, 6) + ", psnr " + num(p, 6) + " dB, loss " + num(l, 8)};
}

WeightStore random_store(Rng& rng) {
  ArchitectureConfig cfg;
  cfg.trunk_channels = 1 + rng.below(4);
  cfg.residual_blocks = rng.below(2);
  cfg.output_channels = 6;
  const auto fp32 = init_weights(build_arch(cfg), rng.bits());
  const auto kind = rng.below(3);
  if (kind == 0) return fp32;
  if (kind == 1) return convert_int8_dynamic(fp32);
  return convert_int8_static(fp32, calibrate(fp32, std::vector<Tensor<float>>{support::random_input(rng.bits(), 6, 6)}));
}

Outcome serialization() {
  Rng rng(19);
  cli::TempDir dir("acceptance_store");
  std::size_t mismatched = 0, undetected = 0, corruptions = 0;
  for (int i = 0; i < 20; ++i) {
    const auto store = random_store(rng);
    const auto path = dir.file("s" + std::to_string(i) + ".holow");
    save_weights(store, path);
    const auto loaded = load_weights(path);
    if (!(loaded == store)) ++mismatched;
    auto bytes = serialize(store);
    for (std::size_t pos = 0; pos < bytes.size(); ++pos) {
      const std::uint8_t orig = bytes[pos];
      bytes[pos] = static_cast<std::uint8_t>(orig ^ (1 + rng.below(255)));
      ++corruptions;
      try {
        deserialize(bytes);
        ++undetected;
      } catch (const FormatError&) {
      }
      bytes[pos] = orig;
    }
  }
  return {mismatched == 0 && undetected == 0,
          std::to_string(mismatched) + " roundtrip mismatches, " + std::to_string(undetected) + " of " +
              std::to_string(corruptions) + " single-byte corruptions undetected"};
}

Outcome degradation_report() {
  cli::TempDir dir("acceptance_cli");
  std::filesystem::create_directories(dir.file("calib"));
  auto ok = [](const cli::Result& r) { return r.exit_code == 0; };
  for (int s = 0; s < 4; ++s) {
    if (!ok(cli::run("synth --seed " + std::to_string(100 + s) + " --width 64 --height 64 --out-prefix " +
                     cli::quote(dir.file("calib/c" + std::to_string(s)).string())))) {
      return {false, "synth failed"};
    }
  }
  double worst_amp = std::numeric_limits<double>::infinity(), worst_phase = worst_amp;
  bool shape_ok = true;
  for (int seed = 1; seed <= 3; ++seed) {
    const std::string tag = std::to_string(seed);
    const std::string fp32 = dir / ("fp32_" + tag + ".holow"), int8 = dir / ("int8_" + tag + ".holow");
    if (!ok(cli::run("gen-weights --seed " + tag + " --out " + fp32)) ||
        !ok(cli::run("quantize --weights " + fp32 + " --calib-dir " + (dir / "calib") + " --out " + int8)) ||
        !ok(cli::run("synth --seed " + std::to_string(200 + seed) + " --width 64 --height 64 --out-prefix " +
                     (dir / ("in" + tag))))) {
      return {false, "model preparation failed for seed " + tag};
    }
    const std::string input = " --rgb " + (dir / ("in" + tag + ".rgb.png")) + " --depth " + (dir / ("in" + tag + ".depth.png"));
    if (!ok(cli::run("infer --weights " + fp32 + input + " --precision fp32 --out-amp " + (dir / "a32.png") +
                     " --out-phase " + (dir / "p32.png"))) ||
        !ok(cli::run("infer --weights " + int8 + input + " --precision int8-static --out-amp " + (dir / "a8.png") +
                     " --out-phase " + (dir / "p8.png")))) {
      return {false, "inference failed for seed " + tag};
    }
    const auto r = cli::run("compare --a-amp " + (dir / "a32.png") + " --a-phase " + (dir / "p32.png") + " --b-amp " +
                                (dir / "a8.png") + " --b-phase " + (dir / "p8.png"),
                            false);
    if (!ok(r)) return {false, "compare failed for seed " + tag};
    const auto brace = r.output.find('{');
    if (brace == std::string::npos) return {false, "compare printed no JSON"};
    const auto j = nlohmann::json::parse(r.output.substr(brace), nullptr, false);
    for (const char* part : {"amplitude", "phase"}) {
      shape_ok &= j.contains(part) && j[part].contains("psnr") && j[part].contains("ssim") &&
                  j[part]["psnr"].is_number() && j[part]["ssim"].is_number();
    }
    shape_ok &= r.output.find("amplitude") < r.output.find("phase") && r.output.find("PSNR (dB)") != std::string::npos;
    if (!shape_ok) return {false, "report shape mismatch: " + r.output};
    worst_amp = std::min(worst_amp, j["amplitude"]["psnr"].get<double>());
    worst_phase = std::min(worst_phase, j["phase"]["psnr"].get<double>());
  }
  const bool pass = std::isfinite(worst_amp) && std::isfinite(worst_phase) && worst_amp >= 30.0 && worst_phase >= 30.0;
  return {pass, "worst psnr amplitude " + num(worst_amp, 2) + " dB, phase " + num(worst_phase, 2) + " dB over 3 models"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"quantization roundtrip within half a step", quantization_roundtrip},
      {"clip range endpoints map to -128 and 127", endpoint_mapping},
      {"integer convolution matches fake-quant oracle", integer_kernel_oracle},
      {"static int8 network matches whole-graph simulation", end_to_end_static_equivalence},
      {"dynamic equals static calibrated on the same input", dynamic_static_coincidence},
      {"int8 store size at most 30% payload and 35% file", size_reduction},
      {"reference architecture audit", architecture_audit},
      {"angular spectrum roundtrip and energy", asm_unitarity},
      {"point hologram focuses on its point", pbm_focus},
      {"metric oracle values", metrics_oracles},
      {"weight file roundtrip and corruption detection", serialization},
      {"fp32 vs int8 comparison report", degradation_report},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
