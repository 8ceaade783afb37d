#include <string>

#include "aindex/adversary.hpp"
#include "aindex/error.hpp"
#include "aindex/synthetic.hpp"

namespace aidx {

CandidateSource synthetic_candidate_source(const std::string& prompt_tag, int height, int width,
                                           int channels) {
  std::uint64_t tag_hash = 1469598103934665603ULL;
  for (unsigned char c : prompt_tag) {
    tag_hash ^= c;
    tag_hash *= 1099511628211ULL;
  }
  return [=](std::uint64_t seed_index) {
    return make_natural_image(height, width, channels, tag_hash ^ (seed_index * 0xD1B54A32D192ED03ULL));
  };
}

AttackerSimReport attacker_sim(const std::string& prompt_tag, const AttackerSimConfig& cfg,
                               const WeightVector& w, const Inverter& inverter,
                               const MetricProviders& providers, std::optional<double> tau_safety,
                               std::optional<double> tau_security) {
  if (cfg.n_candidates < 1 || !cfg.candidate_source) {
    throw Error(ErrorCode::EmptyCandidateSet, "attacker simulation needs at least one candidate");
  }
  AttackerSimReport report;
  report.prompt_tag = prompt_tag;
  report.candidate_scores.reserve(static_cast<std::size_t>(cfg.n_candidates));

  ImageBuffer best;
  for (int i = 0; i < cfg.n_candidates; ++i) {
    ImageBuffer candidate = cfg.candidate_source(static_cast<std::uint64_t>(i));
    const MetricVector m = metric_vector(candidate, inverter.invert(candidate), providers);
    const double score = a_index(composite_score(m, w), w);
    report.candidate_scores.push_back(score);
    // Strict comparison keeps the lowest index on ties.
    if (i == 0 || score > report.selected_score) {
      report.selected_index = static_cast<std::size_t>(i);
      report.selected_score = score;
      best = std::move(candidate);
    }
  }

  AttackConfig refine = cfg.refine;
  refine.direction = AttackDirection::Maximize;
  report.refinement = pgd_attack(best, inverter, w, providers, refine);
  report.refined_score = report.refinement.a_index_after;

  if (tau_safety) {
    report.selected_clears_safety = report.selected_score >= *tau_safety;
    report.refined_clears_safety = report.refined_score >= *tau_safety;
  }
  if (tau_security) {
    report.selected_clears_security = report.selected_score >= *tau_security;
    report.refined_clears_security = report.refined_score >= *tau_security;
  }
  return report;
}

}  // namespace aidx
