#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aindex/error.hpp"
#include "aindex/inverters.hpp"
#include "aindex/synthetic.hpp"
#include "oracles.hpp"

using aidx::ImageBuffer;
using aidx::ReferenceInverterConfig;

namespace {

double linf(const ImageBuffer& a, const ImageBuffer& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.samples()[i] - b.samples()[i]));
  return m;
}

}  // namespace

TEST(ReferenceInverter, Examples) {
  const ImageBuffer x = aidx::make_natural_image(16, 16, 3, 1);
  ReferenceInverterConfig cfg;
  cfg.fidelity = 1.0;
  cfg.noise_sigma = 0.05;
  EXPECT_EQ(aidx::reference_invert(x, cfg), x);

  ReferenceInverterConfig noop;
  noop.blur_sigma = 0.0;
  noop.noise_sigma = 0.0;
  noop.fidelity = 0.0;
  EXPECT_EQ(aidx::reference_invert(x, noop), x);

  ReferenceInverterConfig noisy;
  noisy.noise_sigma = 0.02;
  noisy.noise_seed = 9;
  EXPECT_EQ(aidx::reference_invert(x, noisy), aidx::reference_invert(x, noisy));
  noisy.noise_seed = 10;
  EXPECT_NE(aidx::reference_invert(x, noisy), aidx::reference_invert(x, ReferenceInverterConfig{}));
}

TEST(ReferenceInverter, ConfigValidation) {
  ReferenceInverterConfig cfg;
  cfg.fidelity = 1.5;
  EXPECT_THROW(cfg.validate(), aidx::Error);
  cfg = {};
  cfg.blur_sigma = -1.0;
  EXPECT_THROW(cfg.validate(), aidx::Error);
}

TEST(ReferenceInverter, OutputsSatisfyImageInvariantsUnderFuzz) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 60; ++k) {
    ReferenceInverterConfig cfg;
    cfg.blur_sigma = 3.0 * u(rng);
    cfg.noise_sigma = 0.2 * u(rng);
    cfg.fidelity = u(rng);
    cfg.noise_seed = static_cast<std::uint64_t>(k);
    const int h = 3 + k % 9, w = 2 + k % 7, c = k % 2 ? 3 : 1;
    const ImageBuffer x = aidx::make_uniform_noise_image(h, w, c, static_cast<std::uint64_t>(k));
    const ImageBuffer y = aidx::ReferenceInverter(cfg).invert(x);
    EXPECT_TRUE(y.same_shape(x));
    EXPECT_EQ(y.max_value(), x.max_value());
    EXPECT_NO_THROW(y.validate_range());
  }
}

TEST(ReferenceInverter, NoiselessIsLipschitz) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 40; ++k) {
    ReferenceInverterConfig cfg;
    cfg.blur_sigma = 2.5 * u(rng);
    cfg.fidelity = u(rng);
    const ImageBuffer x = aidx::make_uniform_noise_image(10, 12, 3, 100 + k);
    const ImageBuffer y = aidx::add_gaussian_noise(x, 0.1 * u(rng), k);
    EXPECT_LE(linf(aidx::reference_invert(x, cfg), aidx::reference_invert(y, cfg)),
              linf(x, y) + 1e-9);
  }
}

TEST(ReferenceInverter, DescriptorNamesParameters) {
  ReferenceInverterConfig cfg;
  cfg.fidelity = 0.95;
  const std::string d = aidx::ReferenceInverter(cfg).descriptor();
  EXPECT_NE(d.find("reference"), std::string::npos);
  EXPECT_NE(d.find("0.95"), std::string::npos);
}

TEST(ReferenceInverter, VjpMatchesFiniteDifference) {
  ReferenceInverterConfig cfg;
  cfg.noise_sigma = 0.01;
  const aidx::ReferenceInverter inv(cfg);
  const ImageBuffer x = aidx::make_natural_image(8, 8, 3, 4);
  const ImageBuffer cot = aidx::make_uniform_noise_image(8, 8, 3, 5, -1.0, 1.0, 1.0);
  auto f = [&](const ImageBuffer& u) {
    const ImageBuffer y = inv.invert(u);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y.samples()[i] * cot.samples()[i];
    return s;
  };
  ImageBuffer cot255(8, 8, 3, 255.0, cot.samples());
  const ImageBuffer an = inv.vjp(x, cot255);
  const ImageBuffer fd = oracle::central_gradient(f, x, 255.0 / 1024.0);
  for (std::size_t i = 0; i < an.size(); ++i) EXPECT_NEAR(an.samples()[i], fd.samples()[i], 1e-6);
}

TEST(ReferenceInverter, BaseInterfaceIsNotDifferentiable) {
  struct Plain : aidx::Inverter {
    ImageBuffer invert(const ImageBuffer& x) const override { return x; }
    std::string descriptor() const override { return "plain"; }
  } plain;
  const ImageBuffer x = aidx::make_natural_image(4, 4, 1, 1);
  EXPECT_FALSE(plain.differentiable());
  try {
    plain.vjp(x, x);
    FAIL();
  } catch (const aidx::Error& e) {
    EXPECT_EQ(e.code(), aidx::ErrorCode::NonDifferentiableInverter);
  }
}

TEST(GaussianBlur, PreservesConstantsAndZeroSigma) {
  const ImageBuffer flat(9, 7, 3, 255.0, 77.0);
  for (double v : aidx::gaussian_blur(flat, 2.0).samples()) EXPECT_NEAR(v, 77.0, 1e-9);
  const ImageBuffer x = aidx::make_natural_image(9, 7, 3, 1);
  EXPECT_EQ(aidx::gaussian_blur(x, 0.0), x);
}

TEST(FeatureDiscrepancy, IdentityAndSymmetry) {
  const ImageBuffer x = aidx::make_natural_image(12, 10, 3, 1);
  const ImageBuffer y = aidx::make_natural_image(12, 10, 3, 2);
  for (auto ex : {aidx::FeatureExtractor::FourierMagnitude, aidx::FeatureExtractor::Pyramid}) {
    EXPECT_EQ(aidx::feature_discrepancy(x, x, ex), 0.0);
    EXPECT_NEAR(aidx::feature_discrepancy(x, y, ex), aidx::feature_discrepancy(y, x, ex), 1e-9);
  }
}

TEST(FeatureDiscrepancy, ConstantShiftMovesOnlyDc) {
  const int h = 12, w = 10;
  const ImageBuffer x = aidx::make_natural_image(h, w, 1, 3);
  ImageBuffer y = x;
  const double c = 5.0;
  for (double& v : y.data()) v += c;
  ASSERT_NO_THROW(y.validate_range());
  const auto fx = aidx::fourier_magnitude(x);
  const auto fy = aidx::fourier_magnitude(y);
  ASSERT_EQ(fx.size(), static_cast<std::size_t>(h * w));
  EXPECT_NEAR(fy[0] - fx[0], c * h * w, 1e-8);
  for (std::size_t i = 1; i < fx.size(); ++i) EXPECT_NEAR(fx[i], fy[i], 1e-8);
  EXPECT_NEAR(aidx::feature_discrepancy(x, y, aidx::FeatureExtractor::FourierMagnitude),
              c * h * w, 1e-8);
}

TEST(FeatureDiscrepancy, FourierMagnitudeOfImpulse) {
  ImageBuffer x(4, 4, 1, 255.0, 0.0);
  x.at(1, 2) = 8.0;
  for (double v : aidx::fourier_magnitude(x)) EXPECT_NEAR(v, 8.0, 1e-12);
}
