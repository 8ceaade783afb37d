#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "aindex/calibrate.hpp"
#include "aindex/error.hpp"
#include "corpora.hpp"
#include "oracles.hpp"

using aidx::Label;

namespace {

std::vector<double> normal_sample(std::size_t n, double mean, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(mean, sd);
  std::vector<double> v(n);
  for (double& x : v) x = z(rng);
  return v;
}

std::vector<double> uniform_sample(std::size_t n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

aidx::ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const aidx::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected aidx::Error";
  return aidx::ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Overlap, IdenticalAndDisjoint) {
  const auto a = normal_sample(300, 0.0, 1.0, 1);
  EXPECT_GE(aidx::overlap_estimate(a, a), 0.98);
  const auto lo = uniform_sample(500, 0.0, 0.1, 2);
  const auto hi = uniform_sample(500, 0.9, 1.0, 3);
  EXPECT_LE(aidx::overlap_estimate(lo, hi), 0.01);
  EXPECT_LE(oracle::histogram_min_overlap(lo, hi, 50), 0.01);
}

TEST(Overlap, ShiftByOneBandwidthIsPartial) {
  const auto a = normal_sample(400, 0.0, 1.0, 4);
  const double h = aidx::silverman_bandwidth(a);
  std::vector<double> b = a;
  for (double& x : b) x += h;
  const double v = aidx::overlap_estimate(a, b);
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, 1.0);
}

TEST(Overlap, AgreesWithHistogramOracle) {
  for (int k = 0; k < 10; ++k) {
    const auto a = normal_sample(1000, 0.0, 1.0, 10 + k);
    const auto b = normal_sample(1000, 0.3 * k, 1.0 + 0.1 * k, 50 + k);
    const double kde = aidx::overlap_estimate(a, b);
    EXPECT_GE(kde, 0.0);
    EXPECT_LE(kde, 1.0);
    EXPECT_NEAR(kde, oracle::histogram_min_overlap(a, b, 30), 0.05) << "case " << k;
  }
}

TEST(Overlap, CollapsedSamplesStayBounded) {
  const std::vector<double> a(50, 0.3);
  const auto b = uniform_sample(50, 0.0, 1.0, 5);
  const double v = aidx::overlap_estimate(a, b);
  EXPECT_GE(v, 0.0);
  EXPECT_LE(v, 1.0);
  EXPECT_GE(aidx::overlap_estimate(a, a), 0.98);
}

TEST(Overlap, InsufficientSamples) {
  const std::vector<double> few(9, 0.1);
  const auto many = uniform_sample(50, 0.0, 1.0, 6);
  EXPECT_EQ(code_of([&] { aidx::overlap_estimate(few, many); }),
            aidx::ErrorCode::InsufficientSamples);
}

TEST(Silverman, KnownCases) {
  EXPECT_EQ(aidx::silverman_bandwidth(std::vector<double>(20, 1.0)), 0.0);
  const auto a = normal_sample(5000, 0.0, 2.0, 7);
  EXPECT_NEAR(aidx::silverman_bandwidth(a), 0.9 * 2.0 * std::pow(5000.0, -0.2), 0.05);
}

TEST(Threshold, Examples) {
  std::vector<double> s;
  for (int i = 1; i <= 1000; ++i) s.push_back(0.001 * i);
  EXPECT_EQ(aidx::calibrate_threshold(s, 0.01), s[989]);
  EXPECT_EQ(aidx::calibrate_threshold(s, 0.01), 0.99);

  EXPECT_EQ(aidx::calibrate_threshold(std::vector<double>(200, 0.042), 0.01), 0.042);

  std::vector<double> h;
  for (int i = 1; i <= 100; ++i) h.push_back(i / 100.0);
  EXPECT_EQ(aidx::calibrate_threshold(h, 0.5), 0.50);
}

TEST(Threshold, InsufficientSamplesAndBadTargets) {
  EXPECT_EQ(code_of([] { aidx::calibrate_threshold(std::vector<double>(99, 0.1), 0.01); }),
            aidx::ErrorCode::InsufficientSamples);
  EXPECT_THROW(aidx::calibrate_threshold(std::vector<double>(100, 0.1), 0.0), aidx::Error);
  EXPECT_THROW(aidx::calibrate_threshold(std::vector<double>(100, 0.1), 1.0), aidx::Error);
}

TEST(Threshold, FuzzedFprControlAndOracle) {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> s(1000);
    std::uniform_int_distribution<int> kind(0, 2);
    const int mode = kind(rng);
    std::normal_distribution<double> z(0.03, 0.01);
    std::uniform_int_distribution<int> ties(0, 40);
    for (double& v : s) v = mode == 0 ? z(rng) : mode == 1 ? ties(rng) / 1000.0 : std::exp(z(rng));
    const double tau = aidx::calibrate_threshold(s, 0.01);
    EXPECT_LE(aidx::false_positive_rate(s, tau), 0.01);
    EXPECT_EQ(tau, oracle::sort_count_threshold(s, 0.01));
  }
}

TEST(Threshold, ShiftEquivariance) {
  auto s = uniform_sample(500, 0.0, 0.05, 9);
  for (double& v : s) v = std::round(v * 1e6) / 1e6;
  const double c = 0.25;
  std::vector<double> shifted = s;
  for (double& v : shifted) v += c;
  EXPECT_EQ(aidx::calibrate_threshold(shifted, 0.02), aidx::calibrate_threshold(s, 0.02) + c);
}

TEST(Threshold, SecurityUsesSameRule) {
  const auto s = uniform_sample(400, 0.0, 0.05, 10);
  std::vector<double> attacked = s;
  for (double& v : attacked) v += 0.002;
  EXPECT_NEAR(aidx::calibrate_security_threshold(attacked, 0.01),
              aidx::calibrate_threshold(s, 0.01) + 0.002, 1e-15);
  EXPECT_EQ(aidx::calibrate_security_threshold(s, 0.01), aidx::calibrate_threshold(s, 0.01));
}

TEST(Classify, BoundaryIsAuthentic) {
  EXPECT_EQ(aidx::classify(0.05, 0.0365), aidx::Decision::Authentic);
  EXPECT_EQ(aidx::classify(0.0365, 0.0365), aidx::Decision::Authentic);
  EXPECT_EQ(aidx::classify(0.01, 0.0365), aidx::Decision::PlausiblyDeniable);
  EXPECT_EQ(aidx::to_string(aidx::Decision::PlausiblyDeniable), "plausibly_deniable");
}

TEST(DeConfig, DefaultsAndValidation) {
  aidx::DeConfig cfg;
  EXPECT_EQ(cfg.population, 20);
  EXPECT_EQ(cfg.mutation_f, 0.6);
  EXPECT_EQ(cfg.crossover_cr, 0.7);
  EXPECT_EQ(cfg.max_iterations, 300);
  EXPECT_EQ(cfg.tolerance, 1e-10);
  for (const auto& b : cfg.bounds) {
    EXPECT_EQ(b[0], -10.0);
    EXPECT_EQ(b[1], 10.0);
  }
  EXPECT_NO_THROW(cfg.validate());
  aidx::DeConfig bad = cfg;
  bad.population = 3;
  EXPECT_THROW(bad.validate(), aidx::Error);
  bad = cfg;
  bad.mutation_f = 2.0;
  EXPECT_THROW(bad.validate(), aidx::Error);
  bad = cfg;
  bad.bounds[1] = {1.0, -1.0};
  EXPECT_THROW(bad.validate(), aidx::Error);
}

class PlantedDe : public ::testing::Test {
 protected:
  std::vector<aidx::MetricVector> real = corpora::planted_metrics(200, Label::Real, 1);
  std::vector<aidx::MetricVector> fake = corpora::planted_metrics(200, Label::Fake, 2);
};

TEST_F(PlantedDe, ReachesLowOverlapWithinBounds) {
  aidx::DeConfig cfg;
  cfg.rng_seed = 17;
  double prev_best = 2.0;
  int generations = 0;
  const auto report = aidx::fit_weights_report(
      real, fake, cfg, 0.9, [&](const aidx::DeGeneration& g) {
        ++generations;
        for (const auto& m : g.members) {
          for (int d = 0; d < aidx::kWeightDims; ++d) {
            EXPECT_GE(m[static_cast<std::size_t>(d)], -10.0);
            EXPECT_LE(m[static_cast<std::size_t>(d)], 10.0);
          }
        }
        const double best = g.objectives[g.best_index];
        EXPECT_LE(best, prev_best);
        prev_best = best;
      });
  EXPECT_LE(report.best_objective, 0.05);
  EXPECT_NEAR(aidx::weight_objective(real, fake, report.weights), report.best_objective, 1e-15);
  EXPECT_EQ(report.weights.sigma, 0.9);
  EXPECT_EQ(static_cast<int>(report.best_trace.size()), generations);
  EXPECT_LE(report.generations, 300);
}

TEST_F(PlantedDe, DeterministicPerSeed) {
  aidx::DeConfig cfg;
  cfg.rng_seed = 5;
  cfg.max_iterations = 60;
  const auto a = aidx::fit_weights(real, fake, cfg, 0.9);
  const auto b = aidx::fit_weights(real, fake, cfg, 0.9);
  EXPECT_EQ(a, b);
  cfg.rng_seed = 6;
  const auto c = aidx::fit_weights(real, fake, cfg, 0.9);
  EXPECT_NE(a, c);
}

TEST_F(PlantedDe, IdenticalClassesAreDegenerate) {
  aidx::DeConfig cfg;
  cfg.rng_seed = 3;
  cfg.max_iterations = 40;
  try {
    const auto r = aidx::fit_weights_report(real, real, cfg, 0.9);
    EXPECT_GE(r.best_objective, 0.95);
  } catch (const aidx::Error& e) {
    EXPECT_EQ(e.code(), aidx::ErrorCode::DegenerateObjective);
  }
}

TEST_F(PlantedDe, InsufficientSamples) {
  std::vector<aidx::MetricVector> few(real.begin(), real.begin() + 5);
  EXPECT_EQ(code_of([&] { aidx::fit_weights(few, fake, aidx::DeConfig{}, 0.9); }),
            aidx::ErrorCode::InsufficientSamples);
}

TEST_F(PlantedDe, OrientationPutsRealsHigherAtEqualOverlap) {
  const aidx::WeightVector up{0.0, 1.0, -1.0, 2.0, 0.9};
  const aidx::WeightVector down{0.0, -1.0, 1.0, -2.0, 0.9};
  auto mean_a = [](const std::vector<aidx::MetricVector>& ms, const aidx::WeightVector& w) {
    double s = 0.0;
    for (const auto& m : ms) s += aidx::a_index(aidx::composite_score(m, w), w);
    return s / static_cast<double>(ms.size());
  };
  for (const auto& w : {up, down}) {
    const auto o = aidx::orient_weights(real, fake, w);
    EXPECT_GE(mean_a(real, o), mean_a(fake, o));
    EXPECT_NEAR(aidx::weight_objective(real, fake, o), aidx::weight_objective(real, fake, w), 1e-6);
  }
  EXPECT_EQ(aidx::orient_weights(real, fake, up), aidx::orient_weights(real, fake, down));
}
