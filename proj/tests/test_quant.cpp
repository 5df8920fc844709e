#include "oracles.hpp"

#include <holoq/quant.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace holoq;

namespace {

QuantParams asym(float lo, float hi) { return make_qparams(lo, hi, 8, Scheme::Asymmetric); }

}  // namespace

TEST(RoundHalfEven, Ties) {
  EXPECT_EQ(round_half_even(0.5), 0.0);
  EXPECT_EQ(round_half_even(1.5), 2.0);
  EXPECT_EQ(round_half_even(2.5), 2.0);
  EXPECT_EQ(round_half_even(-2.5), -2.0);
  EXPECT_EQ(round_half_even(-127.5), -128.0);
  EXPECT_EQ(round_half_even(127.5), 128.0);
  EXPECT_EQ(round_half_even(2.4999), 2.0);
  EXPECT_EQ(round_half_even(-0.7), -1.0);
}

TEST(RoundHalfEven, MatchesNearbyint) {
  Rng rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double v = std::round(rng.uniform(-1e6, 1e6) * 2.0) / 2.0 + (i % 3 == 0 ? rng.uniform(-1e-3, 1e-3) : 0.0);
    ASSERT_EQ(round_half_even(v), oracle::rint_even(v)) << v;
  }
}

TEST(ScaleFromRange, DirectEvaluation) {
  EXPECT_FLOAT_EQ(scale_from_range(-1.0f, 1.0f, 8), 2.0f / 255.0f);
  EXPECT_EQ(scale_from_range(0.0f, 255.0f, 8), 1.0f);
  EXPECT_THROW(scale_from_range(0.0f, 0.0f, 8), ValueError);
  EXPECT_THROW(scale_from_range(1.0f, 0.0f, 8), ValueError);
  EXPECT_THROW(scale_from_range(0.0f, 1.0f, 1), ValueError);
}

TEST(ZeroPoint, DirectEvaluation) {
  EXPECT_EQ(zero_point_asymmetric(0.0f, 6.0f / 255.0f, 8), -128);
  EXPECT_EQ(zero_point_asymmetric(-63.75f, 0.5f, 8), 0);
  EXPECT_EQ(zero_point_asymmetric(-62.75f, 0.5f, 8), -2);
  const auto qp = make_qparams(-1.0f, 1.0f, 8, Scheme::Asymmetric);
  EXPECT_EQ(qp.zero_point, 0);
  EXPECT_EQ(quantize_value(-1.0f, qp), -128);
  EXPECT_EQ(quantize_value(1.0f, qp), 127);
  EXPECT_EQ(make_qparams(-3.0f, 1.0f, 8, Scheme::Symmetric).zero_point, 0);
}

TEST(Quantize, EndpointsHitCodeRangeNearTies) {
  Rng rng(11);
  for (int i = 0; i < 200000; ++i) {
    const float lo = static_cast<float>(rng.uniform(-10, 0));
    const float hi = lo + static_cast<float>(rng.uniform(0.01, 20));
    const auto qp = asym(lo, hi);
    ASSERT_EQ(quantize_value(lo, qp), -128) << lo << " " << hi;
    ASSERT_EQ(quantize_value(hi, qp), 127) << lo << " " << hi;
  }
  for (float lo : {-1.0f, -3.0f, -0.1f, -100.0f}) {
    const auto qp = asym(lo, -lo);
    EXPECT_EQ(quantize_value(lo, qp), -128);
    EXPECT_EQ(quantize_value(-lo, qp), 127);
  }
}

TEST(Quantize, Examples) {
  const auto sym = make_qparams(-1.0f, 1.0f, 8, Scheme::Symmetric);
  EXPECT_EQ(quantize_value(0.0f, sym), 0);
  EXPECT_EQ(quantize_value(1.0f, sym), 127);
  const auto relu = asym(0.0f, 6.0f);
  EXPECT_EQ(relu.zero_point, -128);
  EXPECT_EQ(quantize_value(0.0f, relu), -128);
  EXPECT_EQ(quantize_value(6.0f, relu), 127);
  EXPECT_EQ(quantize_value(-10.0f, relu), -128);
  EXPECT_EQ(quantize_value(10.0f, relu), 127);
}

TEST(Quantize, MatchesOracle) {
  Rng rng(2);
  for (int c = 0; c < 50; ++c) {
    const float lo = static_cast<float>(rng.uniform(-10, 0));
    const float hi = lo + static_cast<float>(rng.uniform(0.01, 20));
    const auto qp = asym(lo, hi);
    for (int i = 0; i < 1000; ++i) {
      const float x = static_cast<float>(rng.uniform(lo - 1, hi + 1));
      ASSERT_EQ(quantize_value(x, qp), oracle::quantize(x, qp.scale, qp.zero_point));
    }
  }
}

TEST(Dequantize, Examples) {
  const auto qp = asym(-1.0f, 3.0f);
  EXPECT_EQ(dequantize_value(qp.zero_point, qp), 0.0f);
  const auto sym = make_qparams(-1.0f, 1.0f, 8, Scheme::Symmetric);
  EXPECT_FLOAT_EQ(dequantize_value(127, sym), 254.0f / 255.0f);
}

TEST(Quantize, RoundtripWithinHalfStep) {
  Rng rng(3);
  for (int c = 0; c < 20; ++c) {
    const float lo = static_cast<float>(rng.uniform(-5, 5));
    const float hi = lo + static_cast<float>(rng.uniform(0.001, 10));
    const auto qp = asym(lo, hi);
    std::vector<float> x(10000);
    for (auto& v : x) v = static_cast<float>(rng.uniform(lo, hi));
    const auto back = dequantize<float>(quantize<float>(x, qp), qp);
    for (std::size_t k = 0; k < x.size(); ++k) {
      ASSERT_LE(std::fabs(double(x[k]) - back[k]), qp.scale / 2.0 + 1e-7 * std::fabs(x[k]));
    }
  }
}

TEST(FakeQuantize, GridPointsAreFixed) {
  const auto qp = asym(-2.0f, 5.0f);
  for (int q = -128; q <= 127; ++q) {
    const float v = dequantize_value(q, qp);
    const float f = fake_quantize<float>(std::vector<float>{v}, qp)[0];
    EXPECT_LE(std::fabs(f - v), std::numeric_limits<float>::epsilon() * std::max(1.0f, std::fabs(v)));
  }
}

TEST(FakeQuantize, IdempotentMonotoneAndClipped) {
  Rng rng(4);
  const auto qp = asym(-1.5f, 2.5f);
  std::vector<float> x(5000);
  for (auto& v : x) v = static_cast<float>(rng.uniform(-4, 5));
  std::sort(x.begin(), x.end());
  const auto once = fake_quantize<float>(x, qp);
  const auto twice = fake_quantize<float>(once, qp);
  EXPECT_EQ(once, twice);
  EXPECT_TRUE(std::is_sorted(once.begin(), once.end()));
  const float lo = dequantize_value(-128, qp), hi = dequantize_value(127, qp);
  EXPECT_EQ(fake_quantize<float>(std::vector<float>{-100.0f}, qp)[0], lo);
  EXPECT_EQ(fake_quantize<float>(std::vector<float>{100.0f}, qp)[0], hi);
}

TEST(Quantize, SymmetricIsOdd) {
  Rng rng(5);
  const auto qp = make_qparams(-3.0f, 3.0f, 8, Scheme::Symmetric);
  for (int i = 0; i < 10000; ++i) {
    const float x = static_cast<float>(rng.uniform(-3, 3));
    const double r = double(x) / qp.scale;
    if (std::fabs(r - std::trunc(r)) == 0.5 || std::fabs(r) > 127) continue;
    ASSERT_EQ(quantize_value(-x, qp), -quantize_value(x, qp));
  }
}

TEST(Observer, MinMaxEnvelope) {
  auto o = observe({}, std::vector<float>{-1.0f, 2.0f});
  EXPECT_EQ(o.running_min, -1.0f);
  EXPECT_EQ(o.running_max, 2.0f);
  o = observe(o, std::vector<float>{0.0f, 3.0f});
  EXPECT_EQ(o.running_min, -1.0f);
  EXPECT_EQ(o.running_max, 3.0f);
  EXPECT_EQ(o.count, 2u);

  Rng rng(6);
  std::vector<float> x(257);
  for (auto& v : x) v = static_cast<float>(rng.normal());
  auto y = x;
  std::reverse(y.begin(), y.end());
  std::rotate(y.begin(), y.begin() + 17, y.end());
  EXPECT_EQ(observe({}, x), observe({}, y));

  const auto a = observe({}, std::span<const float>(x).first(100));
  const auto b = observe({}, std::span<const float>(x).subspan(100));
  const auto m = merge(a, b);
  const auto all = observe({}, x);
  EXPECT_EQ(m.running_min, all.running_min);
  EXPECT_EQ(m.running_max, all.running_max);
}

TEST(DynamicQParams, Examples) {
  const auto a = dynamic_qparams(std::vector<float>{0.0f, 6.0f});
  EXPECT_FLOAT_EQ(a.scale, 6.0f / 255.0f);
  EXPECT_EQ(a.zero_point, -128);
  const auto s = dynamic_qparams(std::vector<float>{-3.0f, 3.0f}, 8, Scheme::Symmetric);
  EXPECT_FLOAT_EQ(s.scale, 6.0f / 255.0f);
  EXPECT_EQ(s.zero_point, 0);
  const auto c = dynamic_qparams(std::vector<float>{2.0f, 2.0f, 2.0f});
  EXPECT_EQ(c.range_min, 1.5f);
  EXPECT_EQ(c.range_max, 2.5f);
  const auto z = dynamic_qparams(std::vector<float>(16, 0.0f));
  EXPECT_EQ(quantize_value(0.0f, z) - z.zero_point, 0);
  EXPECT_THROW(dynamic_qparams(std::vector<float>{}), ValueError);
}

TEST(DynamicQParams, NeverSaturatesOwnInput) {
  Rng rng(7);
  for (int c = 0; c < 100; ++c) {
    std::vector<float> x(500);
    const double lo = rng.uniform(-50, 50), width = std::exp(rng.uniform(-6, 6));
    for (auto& v : x) v = static_cast<float>(lo + width * rng.uniform());
    const auto qp = dynamic_qparams(x);
    for (float v : x) {
      const double raw = oracle::rint_even(double(v) / qp.scale) + qp.zero_point;
      ASSERT_GE(raw, -128.0);
      ASSERT_LE(raw, 127.0);
    }
  }
}

TEST(QConv2d, ZeroInputGivesOutputZeroPoint) {
  Rng rng(8);
  const ConvDescriptor d{4, 6, 3, 3, 1};
  const auto in_qp = asym(-1.0f, 2.0f);
  const QTensor x{Tensor<std::int8_t>(Shape{1, 4, 5, 5}, static_cast<std::int8_t>(in_qp.zero_point)), in_qp};
  const auto w_qp = make_qparams(-0.5f, 0.5f, 8, Scheme::Symmetric);
  Tensor<std::int8_t> w(d.weight_shape());
  for (auto& v : w.data()) v = static_cast<std::int8_t>(static_cast<int>(rng.below(255)) - 127);
  const auto out_qp = asym(-3.0f, 1.0f);
  const auto y = qconv2d(x, w, w_qp, std::vector<std::int32_t>(6, 0), out_qp, d);
  for (auto v : y.codes.data()) EXPECT_EQ(v, out_qp.zero_point);
}

TEST(QConv2d, IdentityKernelPropagatesCodes) {
  Rng rng(9);
  const ConvDescriptor d{1, 1, 3, 3, 1};
  const auto qp = asym(-1.0f, 3.0f);
  QuantParams w_qp = make_qparams(-1.0f, 1.0f, 8, Scheme::Symmetric);
  w_qp.scale = 1.0f / 127.0f;
  Tensor<std::int8_t> w(d.weight_shape());
  w(0, 0, 1, 1) = 127;
  Tensor<std::int8_t> codes(Shape{1, 1, 6, 6});
  for (auto& v : codes.data()) v = static_cast<std::int8_t>(static_cast<int>(rng.below(256)) - 128);
  const auto y = qconv2d({codes, qp}, w, w_qp, std::vector<std::int32_t>{0}, qp, d);
  EXPECT_EQ(y.codes, codes);
}

TEST(QConv2d, MatchesFakeQuantOracle) {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const ConvDescriptor d{4, 24, 3, 3, 1};
    const float lo = static_cast<float>(rng.uniform(-2, 0.5));
    const auto in_qp = asym(lo, lo + static_cast<float>(rng.uniform(0.1, 4)));
    const auto w_qp = make_qparams(-static_cast<float>(rng.uniform(0.05, 1)), 0.0f, 8, Scheme::Symmetric);
    const float olo = static_cast<float>(rng.uniform(-6, 0));
    const auto out_qp = asym(olo, olo + static_cast<float>(rng.uniform(0.5, 8)));

    Tensor<std::int8_t> xq(Shape{1, 4, 16, 16}), wq(d.weight_shape());
    for (auto& v : xq.data()) v = static_cast<std::int8_t>(static_cast<int>(rng.below(256)) - 128);
    for (auto& v : wq.data()) v = static_cast<std::int8_t>(static_cast<int>(rng.below(255)) - 127);
    std::vector<float> bias_f(24);
    for (auto& b : bias_f) b = static_cast<float>(rng.uniform(-0.5, 0.5));
    const auto bias = quantize_bias(bias_f, in_qp.scale, w_qp.scale);

    const auto y = qconv2d({xq, in_qp}, wq, w_qp, bias, out_qp, d);

    std::vector<double> xd(xq.size()), wd(wq.size()), bd(24);
    for (std::size_t k = 0; k < xd.size(); ++k) xd[k] = oracle::dequantize(xq.data()[k], in_qp.scale, in_qp.zero_point);
    for (std::size_t k = 0; k < wd.size(); ++k) wd[k] = oracle::dequantize(wq.data()[k], w_qp.scale, 0);
    for (std::size_t o = 0; o < 24; ++o) bd[o] = double(bias[o]) * (double(in_qp.scale) * double(w_qp.scale));
    const auto ref = oracle::conv2d(xq.shape(), xd, 24, 3, 3, 1, wd, bd);
    for (std::size_t k = 0; k < ref.size(); ++k) {
      ASSERT_EQ(y.codes.data()[k], oracle::quantize(ref[k], out_qp.scale, out_qp.zero_point)) << "trial " << trial;
    }
  }
}

TEST(QConv2d, FusedClampEqualsClampThenQuantize) {
  const auto qp = asym(-1.0f, 7.0f);
  const auto c = activation_clamp(qp, 0.0f, 6.0f);
  for (double v = -2.0; v < 8.0; v += 0.001) {
    const auto direct = quantize_value(std::clamp(v, 0.0, 6.0), qp);
    const auto fused = saturate(round_half_even(v / qp.scale) + qp.zero_point, c);
    ASSERT_EQ(direct, fused) << v;
  }
}

TEST(QConv2d, RejectsPossibleOverflow) {
  const ConvDescriptor d{4096, 1, 3, 3, 1};
  QuantParams wide = asym(-1.0f, 1.0f);
  wide.bits = 16;
  wide.zero_point = 0;
  const QTensor x{Tensor<std::int8_t>(Shape{1, 4096, 1, 1}), wide};
  const auto w_qp = make_qparams(-1.0f, 1.0f, 16, Scheme::Symmetric);
  EXPECT_THROW(qconv2d_accumulate(x, Tensor<std::int8_t>(d.weight_shape()), w_qp, std::vector<std::int32_t>{0}, d),
               InvariantError);
}

TEST(Requantize, MatchesQuantizeOfDequantize) {
  Rng rng(11);
  const auto a = asym(-1.0f, 2.0f), b = asym(-0.5f, 1.3f);
  Tensor<std::int8_t> codes(Shape{1, 1, 16, 16});
  for (auto& v : codes.data()) v = static_cast<std::int8_t>(static_cast<int>(rng.below(256)) - 128);
  const QTensor x{codes, a};
  const auto r = requantize(x, b);
  const auto ref = quantize<double>(dequantize<double>(codes.data(), a), b);
  EXPECT_EQ(r.codes.storage(), ref);
}

TEST(Bias, QuantizedAtProductScale) {
  const auto b = quantize_bias(std::vector<float>{0.5f, -0.25f, 0.0f}, 0.01f, 0.02f);
  EXPECT_EQ(b, (std::vector<std::int32_t>{2500, -1250, 0}));
  const auto qp = bias_qparams(0.01f, 0.02f);
  EXPECT_EQ(qp.bits, 32);
  EXPECT_EQ(qp.zero_point, 0);
  EXPECT_FLOAT_EQ(qp.scale, 0.0002f);
}
