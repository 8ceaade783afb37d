#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aindex/image.hpp"
#include "aindex/index.hpp"
#include "aindex/inverters.hpp"
#include "aindex/metrics.hpp"

namespace aidx {

enum class AttackDirection { Maximize, Minimize };
enum class GradientMode { Analytic, FiniteDifference };

std::string_view to_string(AttackDirection d);
std::string_view to_string(GradientMode m);
AttackDirection parse_direction(std::string_view text);
GradientMode parse_gradient_mode(std::string_view text);

struct AttackConfig {
  double epsilon = 8.0 / 255.0;    // l-inf budget, fraction of max_value
  double step_size = 2.0 / 255.0;  // fraction of max_value
  int iterations = 40;
  AttackDirection direction = AttackDirection::Maximize;
  GradientMode gradient_mode = GradientMode::Analytic;
  int fd_samples = 512;
  std::uint64_t rng_seed = 0;

  static AttackConfig with_epsilon(double epsilon);  // step = epsilon / 4
  void validate() const;
};

struct AttackResult {
  ImageBuffer delta;      // best perturbation, same shape as the input
  ImageBuffer perturbed;  // input + delta
  double a_index_before = 0.0;
  double a_index_after = 0.0;
  std::vector<double> objective_trace;  // A-index after each iteration
  std::vector<double> best_trace;       // best-so-far after each iteration
  double linf_norm = 0.0;               // fraction of max_value
  int best_iteration = 0;               // 0 = unperturbed input
};

// The attacked quantity: A-index(x, inverter(u)).
class AttackObjective {
 public:
  AttackObjective(const ImageBuffer& x, const Inverter& inverter, const WeightVector& w,
                  const MetricProviders& providers);

  double operator()(const ImageBuffer& u) const;
  const ImageBuffer& reference() const noexcept { return x_; }
  const Inverter& inverter() const noexcept { return inverter_; }
  const WeightVector& weights() const noexcept { return w_; }
  const MetricProviders& providers() const noexcept { return providers_; }

 private:
  const ImageBuffer& x_;
  const Inverter& inverter_;
  const WeightVector& w_;
  const MetricProviders& providers_;
};

// Finite-difference step on the image's own scale.
inline double fd_step(double max_value) { return max_value / 1024.0; }

// d A-index(x_ref, inverter(u)) / d u at u = x_plus_delta.
//
// Analytic: PSNR, SSIM, perceptual and semantic derivatives composed with the
// sigmoid and pulled back through the inverter's VJP. Needs a differentiable
// inverter and providers.
// FiniteDifference: central differences (step max/1024) on fd_samples
// coordinates drawn without replacement from a seeded generator; zeros
// elsewhere. fd_samples >= size covers every coordinate in index order.
ImageBuffer attack_gradient(const ImageBuffer& x_plus_delta, const AttackObjective& objective,
                            GradientMode mode, int fd_samples, std::uint64_t seed);

// Sign-gradient PGD with l-inf projection and pixel clamping after every
// step; returns the best iterate (including the unperturbed start).
AttackResult pgd_attack(const ImageBuffer& x, const Inverter& inverter, const WeightVector& w,
                        const MetricProviders& providers, const AttackConfig& cfg);

// --- Medium-resource attacker ------------------------------------------------

// Candidate image for a seed index; must be deterministic.
using CandidateSource = std::function<ImageBuffer(std::uint64_t seed_index)>;

struct AttackerSimConfig {
  int n_candidates = 100;
  CandidateSource candidate_source;
  AttackConfig refine;
};

struct AttackerSimReport {
  std::string prompt_tag;
  std::vector<double> candidate_scores;
  std::size_t selected_index = 0;
  double selected_score = 0.0;
  double refined_score = 0.0;
  AttackResult refinement;
  std::optional<bool> selected_clears_safety;
  std::optional<bool> refined_clears_safety;
  std::optional<bool> selected_clears_security;
  std::optional<bool> refined_clears_security;
};

// Procedural stand-in for a text-to-image generator: natural-statistics
// images keyed by (prompt_tag, seed_index).
CandidateSource synthetic_candidate_source(const std::string& prompt_tag, int height, int width,
                                           int channels);

// Scores every candidate, takes the argmax (ties -> lowest seed index), and
// refines it with a maximize-direction PGD attack.
AttackerSimReport attacker_sim(const std::string& prompt_tag, const AttackerSimConfig& cfg,
                               const WeightVector& w, const Inverter& inverter,
                               const MetricProviders& providers,
                               std::optional<double> tau_safety = std::nullopt,
                               std::optional<double> tau_security = std::nullopt);

}  // namespace aidx
