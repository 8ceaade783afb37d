#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aindex/index.hpp"
#include "aindex/metrics.hpp"

namespace aidx {

// --- Distribution overlap ---------------------------------------------------

struct KdeSettings {
  static constexpr int kGridPoints = 512;
  static constexpr double kPaddingBandwidths = 3.0;
  static constexpr std::size_t kMinSamples = 10;
};

// Silverman's rule: 0.9 min(sd, IQR / 1.34) n^(-1/5), falling back to sd when
// the IQR vanishes. Returns 0 for constant input.
double silverman_bandwidth(std::span<const double> samples);

// Integral of min(p_a, p_b) for Gaussian KDEs of the two sample sets on a
// shared 512-point grid, trapezoid rule, clamped to [0, 1].
//
// Each bandwidth is floored at one grid step of the raw joint range so a
// collapsed sample set cannot slip between grid nodes.
double overlap_estimate(std::span<const double> scores_a, std::span<const double> scores_b);

// --- Differential evolution -------------------------------------------------

inline constexpr int kWeightDims = 4;
using WeightPoint = std::array<double, kWeightDims>;

struct DeConfig {
  int population = 20;
  double mutation_f = 0.6;
  double crossover_cr = 0.7;
  int max_iterations = 300;
  std::array<std::array<double, 2>, kWeightDims> bounds{
      {{-10.0, 10.0}, {-10.0, 10.0}, {-10.0, 10.0}, {-10.0, 10.0}}};
  double tolerance = 1e-10;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct DeGeneration {
  int generation = 0;
  std::vector<WeightPoint> members;
  std::vector<double> objectives;
  std::size_t best_index = 0;
};

struct DeReport {
  WeightVector weights;
  double best_objective = 1.0;
  int generations = 0;
  bool converged = false;  // stopped on the tolerance test
  std::vector<double> best_trace;  // best objective after each generation (index 0 = initial)
};

// Population overlap above which the objective counts as saturated.
inline constexpr double kSaturatedOverlap = 0.99;
inline constexpr int kSaturatedGenerations = 3;

// DE/rand/1/bin over (alpha1..alpha4) minimizing the overlap of real vs fake
// A-index distributions; sigma is held fixed. The observer, when set, sees
// every generation including the initial population.
DeReport fit_weights_report(std::span<const MetricVector> real_metrics,
                            std::span<const MetricVector> fake_metrics, const DeConfig& cfg,
                            double sigma,
                            const std::function<void(const DeGeneration&)>& observer = {});

WeightVector fit_weights(std::span<const MetricVector> real_metrics,
                         std::span<const MetricVector> fake_metrics, const DeConfig& cfg,
                         double sigma);

// The overlap objective cannot tell which class sits higher. Negating every
// alpha maps A to 1 - A at equal overlap; returns w or its negation so that
// the mean real A-index is not below the mean fake A-index.
WeightVector orient_weights(std::span<const MetricVector> real_metrics,
                            std::span<const MetricVector> fake_metrics, const WeightVector& w);

// Overlap of A-index distributions for a given weight vector.
double weight_objective(std::span<const MetricVector> real_metrics,
                        std::span<const MetricVector> fake_metrics, const WeightVector& w);

// --- Thresholds -------------------------------------------------------------

// Smallest tau in observed scores (plus max + ulp) with
// |{s > tau}| / n <= fpr_target. Needs n * fpr_target >= 1.
double calibrate_threshold(std::span<const double> fake_scores, double fpr_target);

// Same rule applied to the attacked fake distribution.
double calibrate_security_threshold(std::span<const double> attacked_fake_scores,
                                    double fpr_target);

// Fraction of scores strictly above tau.
double false_positive_rate(std::span<const double> fake_scores, double tau);

enum class Decision { Authentic, PlausiblyDeniable };

std::string_view to_string(Decision d);

// Authentic iff a_index >= tau.
Decision classify(double a_index, double tau);

// --- Results ----------------------------------------------------------------

struct CalibrationResult {
  WeightVector weights;
  double overlap = 1.0;
  std::vector<ScoreSample> real_scores;
  std::vector<ScoreSample> fake_scores;
  double tau_safety = 0.0;
  std::optional<double> tau_security;
  std::vector<ScoreSample> attacked_fake_scores;
  std::string generator_tag;
  double fpr_target = 0.01;
  DeConfig de_config;
  int de_generations = 0;
};

std::vector<double> a_indices(std::span<const ScoreSample> samples);

}  // namespace aidx
