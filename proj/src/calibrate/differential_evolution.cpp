#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "aindex/calibrate.hpp"
#include "aindex/error.hpp"

namespace aidx {

void DeConfig::validate() const {
  if (population < 4) {
    throw Error(ErrorCode::InvalidArgument, "DE population must be >= 4 for rand/1 mutation");
  }
  if (!(mutation_f > 0.0 && mutation_f < 2.0)) {
    throw Error(ErrorCode::InvalidArgument, "DE mutation factor must be in (0, 2)");
  }
  if (!(crossover_cr >= 0.0 && crossover_cr <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "DE crossover rate must be in [0, 1]");
  }
  if (max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "DE max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "DE tolerance must be positive");
  for (const auto& b : bounds) {
    if (!(b[0] < b[1]) || b[0] < -WeightVector::kBound || b[1] > WeightVector::kBound) {
      throw Error(ErrorCode::InvalidArgument, "DE bounds must satisfy -10 <= lo < hi <= 10");
    }
  }
}

namespace {

WeightVector to_weights(const WeightPoint& p, double sigma) {
  return {p[0], p[1], p[2], p[3], sigma};
}

std::vector<double> a_index_values(std::span<const MetricVector> metrics, const WeightVector& w) {
  std::vector<double> out(metrics.size());
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    out[i] = a_index(composite_score(metrics[i], w), w.sigma);
  }
  return out;
}

}  // namespace

double weight_objective(std::span<const MetricVector> real_metrics,
                        std::span<const MetricVector> fake_metrics, const WeightVector& w) {
  return overlap_estimate(a_index_values(real_metrics, w), a_index_values(fake_metrics, w));
}

DeReport fit_weights_report(std::span<const MetricVector> real_metrics,
                            std::span<const MetricVector> fake_metrics, const DeConfig& cfg,
                            double sigma,
                            const std::function<void(const DeGeneration&)>& observer) {
  cfg.validate();
  if (real_metrics.size() < KdeSettings::kMinSamples ||
      fake_metrics.size() < KdeSettings::kMinSamples) {
    throw Error(ErrorCode::InsufficientSamples,
                "fit_weights needs >= 10 samples per class, got " +
                    std::to_string(real_metrics.size()) + " real and " +
                    std::to_string(fake_metrics.size()) + " fake");
  }
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive");

  const int np = cfg.population;
  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick_member(0, np - 1);
  std::uniform_int_distribution<int> pick_dim(0, kWeightDims - 1);

  auto objective = [&](const WeightPoint& p) {
    return weight_objective(real_metrics, fake_metrics, to_weights(p, sigma));
  };

  DeGeneration gen;
  gen.members.resize(static_cast<std::size_t>(np));
  for (auto& m : gen.members) {
    for (int d = 0; d < kWeightDims; ++d) {
      m[d] = cfg.bounds[d][0] + unit(rng) * (cfg.bounds[d][1] - cfg.bounds[d][0]);
    }
  }
  gen.objectives.resize(static_cast<std::size_t>(np));
  for (int i = 0; i < np; ++i) gen.objectives[i] = objective(gen.members[i]);

  auto best_of = [](const std::vector<double>& obj) {
    return static_cast<std::size_t>(std::min_element(obj.begin(), obj.end()) - obj.begin());
  };
  gen.best_index = best_of(gen.objectives);
  if (observer) observer(gen);

  DeReport report;
  report.best_trace.push_back(gen.objectives[gen.best_index]);
  int saturated_run = gen.objectives[gen.best_index] >= kSaturatedOverlap ? 1 : 0;

  std::vector<WeightPoint> trials(static_cast<std::size_t>(np));
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    const auto [lo, hi] = std::minmax_element(gen.objectives.begin(), gen.objectives.end());
    if (*hi - *lo < cfg.tolerance) {
      report.converged = true;
      break;
    }

    // All random draws for the generation happen before any evaluation, so
    // the outcome does not depend on evaluation order.
    for (int i = 0; i < np; ++i) {
      int r1, r2, r3;
      do { r1 = pick_member(rng); } while (r1 == i);
      do { r2 = pick_member(rng); } while (r2 == i || r2 == r1);
      do { r3 = pick_member(rng); } while (r3 == i || r3 == r1 || r3 == r2);
      const int forced = pick_dim(rng);
      const auto& target = gen.members[i];
      auto& trial = trials[i];
      for (int d = 0; d < kWeightDims; ++d) {
        const double mutant = std::clamp(
            gen.members[r1][d] + cfg.mutation_f * (gen.members[r2][d] - gen.members[r3][d]),
            cfg.bounds[d][0], cfg.bounds[d][1]);
        const bool take = unit(rng) < cfg.crossover_cr || d == forced;
        trial[d] = take ? mutant : target[d];
      }
    }
    for (int i = 0; i < np; ++i) {
      const double f = objective(trials[i]);
      if (f <= gen.objectives[i]) {
        gen.members[i] = trials[i];
        gen.objectives[i] = f;
      }
    }
    gen.generation = it;
    gen.best_index = best_of(gen.objectives);
    report.generations = it;
    report.best_trace.push_back(gen.objectives[gen.best_index]);
    if (observer) observer(gen);

    saturated_run = gen.objectives[gen.best_index] >= kSaturatedOverlap ? saturated_run + 1 : 0;
    if (saturated_run >= kSaturatedGenerations) {
      throw Error(ErrorCode::DegenerateObjective,
                  "overlap stayed >= " + std::to_string(kSaturatedOverlap) + " for " +
                      std::to_string(kSaturatedGenerations) +
                      " generations; real and fake metric distributions look inseparable");
    }
  }

  report.weights = to_weights(gen.members[gen.best_index], sigma);
  report.best_objective = gen.objectives[gen.best_index];
  return report;
}

WeightVector orient_weights(std::span<const MetricVector> real_metrics,
                            std::span<const MetricVector> fake_metrics, const WeightVector& w) {
  auto mean_a = [&](std::span<const MetricVector> ms) {
    double sum = 0.0;
    for (const auto& m : ms) sum += a_index(composite_score(m, w), w);
    return ms.empty() ? 0.0 : sum / static_cast<double>(ms.size());
  };
  if (mean_a(real_metrics) >= mean_a(fake_metrics)) return w;
  return {-w.alpha1, -w.alpha2, -w.alpha3, -w.alpha4, w.sigma};
}

WeightVector fit_weights(std::span<const MetricVector> real_metrics,
                         std::span<const MetricVector> fake_metrics, const DeConfig& cfg,
                         double sigma) {
  return fit_weights_report(real_metrics, fake_metrics, cfg, sigma).weights;
}

}  // namespace aidx
