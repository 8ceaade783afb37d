#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "aindex/adversary.hpp"
#include "aindex/error.hpp"

namespace aidx {

AttackObjective::AttackObjective(const ImageBuffer& x, const Inverter& inverter,
                                 const WeightVector& w, const MetricProviders& providers)
    : x_(x), inverter_(inverter), w_(w), providers_(providers) {}

double AttackObjective::operator()(const ImageBuffer& u) const {
  const MetricVector m = metric_vector(x_, inverter_.invert(u), providers_);
  return a_index(composite_score(m, w_), w_);
}

namespace {

void axpy(double a, const ImageBuffer& x, ImageBuffer& y) {
  auto src = x.data();
  auto dst = y.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += a * src[i];
}

ImageBuffer analytic_gradient(const ImageBuffer& u, const AttackObjective& objective) {
  const Inverter& inverter = objective.inverter();
  if (!inverter.differentiable()) {
    throw Error(ErrorCode::NonDifferentiableInverter,
                "analytic gradient needs a differentiable inverter, got " + inverter.descriptor());
  }
  const ImageBuffer& x = objective.reference();
  const WeightVector& w = objective.weights();
  const MetricProviders& providers = objective.providers();

  const ImageBuffer y = inverter.invert(u);
  if (!y.same_shape(x)) {
    throw Error(ErrorCode::DimensionMismatch, "inverter output shape differs from its input");
  }
  const MetricVector m = metric_vector(x, y, providers);
  const double s = composite_score(m, w);
  const double dA_ds = a_index_derivative(s, w.sigma);

  ImageBuffer g_y(y.height(), y.width(), y.channels(), y.max_value(), 0.0);
  if (w.alpha1 != 0.0) axpy(w.alpha1, psnr_gradient(x, y), g_y);
  if (w.alpha2 != 0.0) axpy(w.alpha2, ssim_gradient(x, y, providers.ssim), g_y);
  if (w.alpha3 != 0.0) {
    const auto* p = providers.perceptual.get();
    if (p == nullptr) throw Error(ErrorCode::ProviderUnavailable, "no perceptual provider");
    if (!p->differentiable()) {
      throw Error(ErrorCode::NonDifferentiableProvider, p->name() + " is not differentiable");
    }
    axpy(-w.alpha3, p->distance_gradient(x, y), g_y);
  }
  if (w.alpha4 != 0.0) {
    const auto* p = providers.semantic.get();
    if (p == nullptr) throw Error(ErrorCode::ProviderUnavailable, "no semantic provider");
    if (!p->differentiable()) {
      throw Error(ErrorCode::NonDifferentiableProvider, p->name() + " is not differentiable");
    }
    const auto ex = p->embed(x);
    axpy(w.alpha4, p->embed_vjp(y, ex), g_y);
  }
  for (double& v : g_y.data()) v *= dA_ds;
  return inverter.vjp(u, g_y);
}

ImageBuffer finite_difference_gradient(const ImageBuffer& u, const AttackObjective& objective,
                                       int fd_samples, std::uint64_t seed) {
  if (fd_samples < 1) throw Error(ErrorCode::InvalidArgument, "fd_samples must be >= 1");
  const std::size_t n = u.size();
  std::vector<std::size_t> coords(n);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  const auto k = std::min(n, static_cast<std::size_t>(fd_samples));
  if (k < n) {
    // Partial Fisher-Yates: the first k entries are a uniform sample.
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(coords[i], coords[pick(rng)]);
    }
    coords.resize(k);
  }

  const double h = fd_step(u.max_value());
  ImageBuffer grad(u.height(), u.width(), u.channels(), u.max_value(), 0.0);
  ImageBuffer probe = u;
  for (std::size_t c : coords) {
    const double original = probe.data()[c];
    probe.data()[c] = original + h;
    const double f_plus = objective(probe);
    probe.data()[c] = original - h;
    const double f_minus = objective(probe);
    probe.data()[c] = original;
    grad.data()[c] = (f_plus - f_minus) / (2.0 * h);
  }
  return grad;
}

}  // namespace

ImageBuffer attack_gradient(const ImageBuffer& x_plus_delta, const AttackObjective& objective,
                            GradientMode mode, int fd_samples, std::uint64_t seed) {
  if (mode == GradientMode::Analytic) return analytic_gradient(x_plus_delta, objective);
  return finite_difference_gradient(x_plus_delta, objective, fd_samples, seed);
}

}  // namespace aidx
