#include "aindex/error.hpp"
#include "aindex/metrics.hpp"

namespace aidx {

MetricProviders MetricProviders::reference(SsimConfig cfg) {
  MetricProviders p;
  p.ssim = cfg;
  p.perceptual = std::make_shared<ReferencePyramidDistance>();
  p.semantic = std::make_shared<ReferenceSemanticEmbedding>();
  return p;
}

MetricVector metric_vector(const ImageBuffer& x, const ImageBuffer& x_inv,
                           const MetricProviders& providers, const PartialMetrics& overrides) {
  MetricVector m;
  if (overrides.complete()) {
    return {*overrides.psnr, *overrides.ssim, *overrides.lpips, *overrides.clip};
  }
  const ImageBuffer y = match_dimensions(x_inv, x);
  m.psnr = overrides.psnr ? *overrides.psnr : psnr(x, y);
  m.ssim = overrides.ssim ? *overrides.ssim : ssim(x, y, providers.ssim);
  m.lpips = overrides.lpips ? *overrides.lpips : perceptual_distance(x, y, providers.perceptual.get());
  m.clip_sim = overrides.clip ? *overrides.clip : semantic_similarity(x, y, providers.semantic.get());
  return m;
}

}  // namespace aidx
