#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

#include "aindex/adversary.hpp"
#include "aindex/error.hpp"

namespace aidx {

std::string_view to_string(AttackDirection d) {
  return d == AttackDirection::Maximize ? "maximize" : "minimize";
}

std::string_view to_string(GradientMode m) {
  return m == GradientMode::Analytic ? "analytic" : "finite_difference";
}

AttackDirection parse_direction(std::string_view text) {
  if (text == "maximize" || text == "max") return AttackDirection::Maximize;
  if (text == "minimize" || text == "min") return AttackDirection::Minimize;
  throw Error(ErrorCode::InvalidArgument, "direction must be maximize|minimize");
}

GradientMode parse_gradient_mode(std::string_view text) {
  if (text == "analytic") return GradientMode::Analytic;
  if (text == "finite_difference" || text == "fd") return GradientMode::FiniteDifference;
  throw Error(ErrorCode::InvalidArgument, "gradient mode must be analytic|finite_difference");
}

AttackConfig AttackConfig::with_epsilon(double epsilon) {
  AttackConfig cfg;
  cfg.epsilon = epsilon;
  cfg.step_size = epsilon / 4.0;
  return cfg;
}

void AttackConfig::validate() const {
  if (!(epsilon > 0.0) || epsilon > 64.0 / 255.0) {
    throw Error(ErrorCode::InvalidArgument, "epsilon must be in (0, 64/255]");
  }
  if (!(step_size > 0.0) || step_size > 2.0 * epsilon) {
    throw Error(ErrorCode::InvalidArgument, "step_size must be in (0, 2 epsilon]");
  }
  if (iterations < 0) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 0");
  if (fd_samples < 1) throw Error(ErrorCode::InvalidArgument, "fd_samples must be >= 1");
}

AttackResult pgd_attack(const ImageBuffer& x, const Inverter& inverter, const WeightVector& w,
                        const MetricProviders& providers, const AttackConfig& cfg) {
  cfg.validate();
  if (cfg.gradient_mode == GradientMode::Analytic && !inverter.differentiable()) {
    throw Error(ErrorCode::NonDifferentiableInverter,
                "analytic PGD needs a differentiable inverter, got " + inverter.descriptor());
  }
  const double max_value = x.max_value();
  const double eps = cfg.epsilon * max_value;
  const double step = cfg.step_size * max_value;
  const double sign = cfg.direction == AttackDirection::Maximize ? 1.0 : -1.0;
  auto better = [&](double candidate, double incumbent) {
    return cfg.direction == AttackDirection::Maximize ? candidate > incumbent
                                                      : candidate < incumbent;
  };

  const AttackObjective objective(x, inverter, w, providers);
  ImageBuffer delta(x.height(), x.width(), x.channels(), max_value, 0.0);
  ImageBuffer current = x;

  AttackResult result;
  result.a_index_before = objective(x);
  result.a_index_after = result.a_index_before;
  result.delta = delta;
  result.objective_trace.reserve(static_cast<std::size_t>(cfg.iterations));
  result.best_trace.reserve(static_cast<std::size_t>(cfg.iterations));

  auto xs = x.data();
  auto ds = delta.data();
  auto us = current.data();
  for (int it = 0; it < cfg.iterations; ++it) {
    const ImageBuffer grad = attack_gradient(current, objective, cfg.gradient_mode, cfg.fd_samples,
                                             cfg.rng_seed + static_cast<std::uint64_t>(it));
    auto gs = grad.data();
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const double direction = gs[i] > 0.0 ? 1.0 : (gs[i] < 0.0 ? -1.0 : 0.0);
      const double stepped = std::clamp(ds[i] + sign * step * direction, -eps, eps);
      us[i] = std::clamp(xs[i] + stepped, 0.0, max_value);
      ds[i] = us[i] - xs[i];
    }
#ifndef NDEBUG
    for (std::size_t i = 0; i < ds.size(); ++i) {
      assert(std::abs(ds[i]) <= eps * (1.0 + 1e-12));
      assert(us[i] >= 0.0 && us[i] <= max_value);
    }
#endif
    const double value = objective(current);
    result.objective_trace.push_back(value);
    if (better(value, result.a_index_after)) {
      result.a_index_after = value;
      result.delta = delta;
      result.best_iteration = it + 1;
    }
    result.best_trace.push_back(result.a_index_after);
  }

  result.perturbed = x;
  auto ps = result.perturbed.data();
  auto bd = result.delta.data();
  double linf = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ps[i] = std::clamp(xs[i] + bd[i], 0.0, max_value);
    linf = std::max(linf, std::abs(bd[i]));
  }
  result.linf_norm = linf / max_value;
  return result;
}

}  // namespace aidx
