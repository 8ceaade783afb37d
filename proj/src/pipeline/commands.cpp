#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "aindex/error.hpp"
#include "aindex/image.hpp"
#include "aindex/pipeline.hpp"
#include "aindex/video.hpp"

namespace aidx {

namespace {

struct Outcome {
  std::optional<ScoreSample> sample;
  std::optional<RecordError> error;
  std::vector<std::string> warnings;
  ordered_json row;  // command-specific detail row
};

int effective_workers(const ScoringSetup& setup) {
  if (setup.inverter && !setup.inverter->thread_safe()) return 1;
  return std::max(1, setup.workers);
}

// Runs body(i, outcome) for every item, turning exceptions into error entries.
void run_items(std::size_t n, const ScoringSetup& setup, const std::vector<std::string>& ids,
               std::vector<Outcome>& outcomes,
               const std::function<void(std::size_t, Outcome&)>& body) {
  outcomes.assign(n, Outcome{});
  parallel_for(n, effective_workers(setup), [&](std::size_t i) {
    Outcome& out = outcomes[i];
    try {
      body(i, out);
    } catch (const Error& e) {
      out.sample.reset();
      out.error = RecordError{ids[i], e.code(), e.what()};
    } catch (const std::exception& e) {
      out.sample.reset();
      out.error = RecordError{ids[i], ErrorCode::IoError, e.what()};
    }
  });
}

void merge_outcomes(std::vector<Outcome>& outcomes, RunReport& report, ordered_json* rows) {
  std::vector<std::pair<std::string, ordered_json>> keyed;
  for (auto& o : outcomes) {
    for (auto& w : o.warnings) report.warnings.push_back(std::move(w));
    if (o.error) report.errors.push_back(std::move(*o.error));
    if (o.sample) {
      if (rows && !o.row.is_null()) keyed.emplace_back(o.sample->record_id, std::move(o.row));
      report.scores.push_back(std::move(*o.sample));
    }
  }
  if (rows) {
    std::sort(keyed.begin(), keyed.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    *rows = ordered_json::array();
    for (auto& [id, row] : keyed) rows->push_back(std::move(row));
  }
}

ordered_json setup_echo(const ScoringSetup& setup) {
  ordered_json j;
  ordered_json w = weights_to_json(setup.weights);
  w.erase("schema");
  w.erase("version");
  j["weights"] = std::move(w);
  ordered_json ssim;
  ssim["window"] = setup.providers.ssim.window;
  ssim["gaussian_sigma"] = setup.providers.ssim.gaussian_sigma;
  ssim["k1"] = setup.providers.ssim.k1;
  ssim["k2"] = setup.providers.ssim.k2;
  j["ssim"] = std::move(ssim);
  j["perceptual"] = setup.providers.perceptual ? setup.providers.perceptual->name() : "none";
  j["semantic"] = setup.providers.semantic ? setup.providers.semantic->name() : "none";
  j["inverter"] = setup.inverter ? setup.inverter->descriptor() : "external";
  return j;
}

ordered_json attack_echo(const AttackConfig& a) {
  ordered_json j;
  j["epsilon"] = a.epsilon;
  j["step_size"] = a.step_size;
  j["iterations"] = a.iterations;
  j["direction"] = std::string(to_string(a.direction));
  j["gradient_mode"] = std::string(to_string(a.gradient_mode));
  j["fd_samples"] = a.fd_samples;
  j["rng_seed"] = a.rng_seed;
  return j;
}

void merge_echo(ordered_json& config, const ordered_json& extra) {
  if (!extra.is_object()) return;
  for (const auto& [k, v] : extra.items()) config[k] = v;
}

std::uint64_t id_seed(std::uint64_t base, const std::string& id) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return base + h;
}

std::vector<std::string> record_ids(const std::vector<PairRecord>& records) {
  std::vector<std::string> ids;
  ids.reserve(records.size());
  for (const auto& r : records) ids.push_back(r.record_id);
  return ids;
}

ordered_json channel_conventions() {
  ordered_json j;
  j["psnr"] = "all channels";
  j["ssim"] = "BT.601 luminance";
  j["mismatched_sizes"] = "inverted image resampled to the original";
  return j;
}

const char* kAsrDefinition =
    "attack success rate = records correctly classified before the attack whose classification "
    "flips after it, divided by records correctly classified before the attack";

}  // namespace

// --- score -----------------------------------------------------------------------

RunReport cmd_score(const ScoreOptions& opts) {
  const Manifest manifest = load_manifest(opts.manifest);
  RunReport report;
  report.command = "score";
  report.config["manifest"] = opts.manifest.generic_string();
  report.config["scoring"] = setup_echo(opts.setup);
  report.config["tau"] = opts.tau ? ordered_json(*opts.tau) : ordered_json(nullptr);
  merge_echo(report.config, opts.config_echo);
  report.metadata["channels"] = channel_conventions();
  if (manifest.header) report.metadata["manifest_header"] = *manifest.header;
  report.tau = opts.tau;

  std::vector<Outcome> outcomes;
  run_items(manifest.records.size(), opts.setup, record_ids(manifest.records), outcomes,
            [&](std::size_t i, Outcome& out) {
              out.sample = score_record(manifest.records[i], opts.setup, &out.warnings);
            });
  merge_outcomes(outcomes, report, nullptr);
  finalize_report(report);
  return report;
}

// --- calibrate -------------------------------------------------------------------

CalibrateOutcome cmd_calibrate(const CalibrateOptions& opts) {
  opts.de.validate();
  if (!(opts.fpr > 0.0 && opts.fpr < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "fpr must be in (0, 1)");
  }
  if (opts.attack) {
    opts.attack->validate();
    if (!opts.setup.inverter) {
      throw Error(ErrorCode::LiveInverterRequired,
                  "security calibration attacks the inverter; external inversions cannot be "
                  "re-run on perturbed inputs");
    }
  }

  std::vector<PairRecord> records;
  ordered_json headers = ordered_json::array();
  for (const auto& path : opts.manifests) {
    Manifest m = load_manifest(path);
    if (m.header) headers.push_back(*m.header);
    for (auto& r : m.records) records.push_back(std::move(r));
  }
  {
    std::vector<std::string> ids = record_ids(records);
    std::sort(ids.begin(), ids.end());
    auto dup = std::adjacent_find(ids.begin(), ids.end());
    if (dup != ids.end()) {
      throw Error(ErrorCode::DuplicateId, "id \"" + *dup + "\" appears in more than one manifest");
    }
  }

  CalibrateOutcome result;
  RunReport& report = result.report;
  report.command = "calibrate";
  ordered_json manifests = ordered_json::array();
  for (const auto& p : opts.manifests) manifests.push_back(p.generic_string());
  report.config["manifests"] = std::move(manifests);
  report.config["scoring"] = setup_echo(opts.setup);
  report.config["scoring"].erase("weights");
  report.config["sigma"] = opts.sigma;
  report.config["fpr"] = opts.fpr;
  report.config["generator"] = opts.generator_tag;
  ordered_json de;
  de["population"] = opts.de.population;
  de["mutation_f"] = opts.de.mutation_f;
  de["crossover_cr"] = opts.de.crossover_cr;
  de["max_iterations"] = opts.de.max_iterations;
  de["tolerance"] = opts.de.tolerance;
  de["rng_seed"] = opts.de.rng_seed;
  report.config["de"] = std::move(de);
  report.config["attack"] = opts.attack ? attack_echo(*opts.attack) : ordered_json(nullptr);
  merge_echo(report.config, opts.config_echo);
  report.metadata["channels"] = channel_conventions();
  ordered_json kde;
  kde["kernel"] = "gaussian";
  kde["bandwidth"] = "silverman, floored at joint range / 511";
  kde["grid_points"] = KdeSettings::kGridPoints;
  kde["padding_bandwidths"] = KdeSettings::kPaddingBandwidths;
  kde["integration"] = "trapezoid";
  report.metadata["overlap_estimator"] = std::move(kde);
  if (!headers.empty()) report.metadata["manifest_headers"] = std::move(headers);

  // Metrics do not depend on the weights, so they are computed once.
  std::vector<Outcome> outcomes;
  const std::vector<std::string> ids = record_ids(records);
  std::vector<MetricVector> metrics(records.size());
  run_items(records.size(), opts.setup, ids, outcomes, [&](std::size_t i, Outcome& out) {
    metrics[i] = record_metrics(records[i], opts.setup, &out.warnings);
    out.sample = ScoreSample{records[i].record_id, records[i].label, records[i].generator,
                             metrics[i], 0.0, 0.5};
  });
  std::vector<MetricVector> real_m, fake_m;
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!outcomes[i].sample) continue;
    ok.push_back(i);
    (records[i].label == Label::Real ? real_m : fake_m).push_back(metrics[i]);
  }
  for (auto& o : outcomes) {
    for (auto& w : o.warnings) report.warnings.push_back(std::move(w));
    if (o.error) report.errors.push_back(std::move(*o.error));
  }

  if (real_m.size() < KdeSettings::kMinSamples || fake_m.size() < KdeSettings::kMinSamples) {
    throw Error(ErrorCode::InsufficientSamples,
                "calibration needs at least " + std::to_string(KdeSettings::kMinSamples) +
                    " scored records per class, got " + std::to_string(real_m.size()) + " real and " +
                    std::to_string(fake_m.size()) + " fake");
  }

  DeReport de_report;
  try {
    de_report = fit_weights_report(real_m, fake_m, opts.de, opts.sigma);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateObjective) throw;
    throw Error(ErrorCode::DegenerateObjective,
                std::string(e.what()) +
                    ". The real and fake corpora overlap under every weight vector tried; check "
                    "that the manifests carry the intended labels and that the two classes were "
                    "inverted by different processes");
  }

  CalibrationResult& cal = result.result;
  cal.weights = orient_weights(real_m, fake_m, de_report.weights);
  cal.overlap = weight_objective(real_m, fake_m, cal.weights);
  cal.generator_tag = opts.generator_tag;
  cal.fpr_target = opts.fpr;
  cal.de_config = opts.de;
  cal.de_generations = de_report.generations;
  for (std::size_t i : ok) {
    ScoreSample s = make_score_sample(records[i].record_id, records[i].label,
                                      records[i].generator, metrics[i], cal.weights);
    (s.label == Label::Real ? cal.real_scores : cal.fake_scores).push_back(s);
    report.scores.push_back(std::move(s));
  }
  auto by_id = [](const ScoreSample& a, const ScoreSample& b) { return a.record_id < b.record_id; };
  std::sort(cal.real_scores.begin(), cal.real_scores.end(), by_id);
  std::sort(cal.fake_scores.begin(), cal.fake_scores.end(), by_id);
  cal.tau_safety = calibrate_threshold(a_indices(cal.fake_scores), opts.fpr);

  if (opts.attack) {
    AttackConfig attack = *opts.attack;
    attack.direction = AttackDirection::Maximize;
    std::vector<std::size_t> fake_idx;
    for (std::size_t i : ok) {
      if (records[i].label == Label::Fake) fake_idx.push_back(i);
    }
    std::vector<std::string> fake_ids;
    for (std::size_t i : fake_idx) fake_ids.push_back(records[i].record_id);
    ScoringSetup attack_setup = opts.setup;
    attack_setup.weights = cal.weights;
    std::vector<Outcome> attacked;
    run_items(fake_idx.size(), attack_setup, fake_ids, attacked, [&](std::size_t k, Outcome& out) {
      const PairRecord& rec = records[fake_idx[k]];
      const ImageBuffer x = load_image(rec.original_path());
      AttackConfig cfg = attack;
      cfg.rng_seed = id_seed(attack.rng_seed, rec.record_id);
      const AttackResult r = pgd_attack(x, *opts.setup.inverter, cal.weights, opts.setup.providers, cfg);
      const ScoreSample clean =
          make_score_sample(rec.record_id, rec.label, rec.generator, metrics[fake_idx[k]], cal.weights);
      // The attacker may also submit the unperturbed image.
      ScoreSample s = clean;
      if (r.best_iteration > 0 && r.a_index_after > clean.a_index) {
        s.metrics = metric_vector(x, opts.setup.inverter->invert(r.perturbed), opts.setup.providers);
        s.composite = composite_score(s.metrics, cal.weights);
        s.a_index = r.a_index_after;
      }
      out.sample = std::move(s);
    });
    for (auto& o : attacked) {
      if (o.error) report.errors.push_back(std::move(*o.error));
      if (o.sample) cal.attacked_fake_scores.push_back(std::move(*o.sample));
    }
    std::sort(cal.attacked_fake_scores.begin(), cal.attacked_fake_scores.end(), by_id);
    cal.tau_security = calibrate_security_threshold(a_indices(cal.attacked_fake_scores), opts.fpr);
  }

  report.tau = cal.tau_safety;
  report.details["overlap"] = cal.overlap;
  report.details["tau_safety"] = cal.tau_safety;
  report.details["tau_security"] =
      cal.tau_security ? ordered_json(*cal.tau_security) : ordered_json(nullptr);
  report.details["de_generations"] = de_report.generations;
  report.details["de_converged"] = de_report.converged;
  report.details["de_best_trace"] = de_report.best_trace;
  report.details["fake_fpr_at_tau_safety"] =
      false_positive_rate(a_indices(cal.fake_scores), cal.tau_safety);
  finalize_report(report);
  return result;
}

// --- attack ----------------------------------------------------------------------

AttackSummary attack_summary_from_rows(const ordered_json& rows, double tau) {
  AttackSummary s;
  std::size_t total = 0, correct_before = 0, correct_after = 0;
  for (const auto& row : rows) {
    const Label label = parse_label(row.at("label").get<std::string>());
    const double before = row.at("a_index_before").get<double>();
    const double after = row.at("a_index_after").get<double>();
    const Decision want = label == Label::Real ? Decision::Authentic : Decision::PlausiblyDeniable;
    const bool ok_before = classify(before, tau) == want;
    const bool ok_after = classify(after, tau) == want;
    AttackTally& t = label == Label::Real ? s.real : s.fake;
    ++t.total;
    t.correct_before += ok_before;
    t.correct_after += ok_after;
    t.flipped += ok_before && !ok_after;
    ++total;
    correct_before += ok_before;
    correct_after += ok_after;
  }
  if (total > 0) {
    s.accuracy_before = static_cast<double>(correct_before) / static_cast<double>(total);
    s.accuracy_after = static_cast<double>(correct_after) / static_cast<double>(total);
  }
  return s;
}

namespace {

void dump_attack_images(const std::filesystem::path& dir, const std::string& id,
                        const ImageBuffer& x, const AttackResult& r) {
  std::filesystem::create_directories(dir);
  save_image(x, dir / (id + "_x.png"));
  save_image(r.perturbed, dir / (id + "_adv.png"));
  ImageBuffer amp = r.delta;
  const double mid = 0.5 * x.max_value();
  for (double& v : amp.data()) v = std::clamp(mid + 10.0 * v, 0.0, x.max_value());
  save_image(amp, dir / (id + "_delta10.png"));
}

}  // namespace

RunReport cmd_attack(const AttackOptions& opts) {
  if (!opts.setup.inverter) {
    throw Error(ErrorCode::LiveInverterRequired,
                "attack needs a live inverter; precomputed inversions cannot be re-run on "
                "perturbed inputs");
  }
  opts.attack.validate();
  const Manifest manifest = load_manifest(opts.manifest);

  RunReport report;
  report.command = "attack";
  report.config["manifest"] = opts.manifest.generic_string();
  report.config["scoring"] = setup_echo(opts.setup);
  report.config["tau"] = opts.tau;
  report.config["attack"] = attack_echo(opts.attack);
  report.config["attack"]["direction"] =
      opts.forced_direction ? std::string(to_string(*opts.forced_direction)) : "auto";
  merge_echo(report.config, opts.config_echo);
  report.metadata["asr_definition"] = kAsrDefinition;
  report.tau = opts.tau;

  std::mutex dump_mutex;
  std::vector<Outcome> outcomes;
  run_items(manifest.records.size(), opts.setup, record_ids(manifest.records), outcomes,
            [&](std::size_t i, Outcome& out) {
              const PairRecord& rec = manifest.records[i];
              const ImageBuffer x = load_image(rec.original_path());
              AttackConfig cfg = opts.attack;
              cfg.direction = opts.forced_direction.value_or(
                  rec.label == Label::Fake ? AttackDirection::Maximize : AttackDirection::Minimize);
              cfg.rng_seed = id_seed(opts.attack.rng_seed, rec.record_id);
              const Inverter& inv = *opts.setup.inverter;
              const AttackResult r = pgd_attack(x, inv, opts.setup.weights, opts.setup.providers, cfg);
              const MetricVector before = metric_vector(x, inv.invert(x), opts.setup.providers);
              out.sample = make_score_sample(rec.record_id, rec.label, rec.generator, before,
                                             opts.setup.weights);
              ordered_json row;
              row["id"] = rec.record_id;
              row["label"] = std::string(to_string(rec.label));
              row["direction"] = std::string(to_string(cfg.direction));
              row["a_index_before"] = r.a_index_before;
              row["a_index_after"] = r.a_index_after;
              row["decision_before"] = std::string(to_string(classify(r.a_index_before, opts.tau)));
              row["decision_after"] = std::string(to_string(classify(r.a_index_after, opts.tau)));
              row["linf"] = r.linf_norm;
              row["best_iteration"] = r.best_iteration;
              out.row = std::move(row);
              if (opts.dump_dir) {
                std::lock_guard lock(dump_mutex);
                dump_attack_images(*opts.dump_dir, rec.record_id, x, r);
              }
            });
  ordered_json rows;
  merge_outcomes(outcomes, report, &rows);
  report.details["attack_summary"] = attack_summary_to_json(attack_summary_from_rows(rows, opts.tau));
  report.details["rows"] = std::move(rows);
  finalize_report(report);
  return report;
}

// --- attacker simulation ---------------------------------------------------------

AttackerSimReport run_attacker_sim(const AttackerSimOptions& opts) {
  if (!opts.setup.inverter) {
    throw Error(ErrorCode::LiveInverterRequired, "attacker simulation needs a live inverter");
  }
  AttackerSimConfig cfg;
  cfg.n_candidates = opts.n_candidates;
  cfg.candidate_source =
      synthetic_candidate_source(opts.prompt_tag, opts.height, opts.width, opts.channels);
  cfg.refine = opts.refine;
  return attacker_sim(opts.prompt_tag, cfg, opts.setup.weights, *opts.setup.inverter,
                      opts.setup.providers, opts.tau_safety, opts.tau_security);
}

RunReport cmd_attacker_sim(const AttackerSimOptions& opts) {
  RunReport report;
  report.command = "attacker-sim";
  report.config["prompt_tag"] = opts.prompt_tag;
  report.config["n_candidates"] = opts.n_candidates;
  report.config["shape"] = {opts.height, opts.width, opts.channels};
  report.config["scoring"] = setup_echo(opts.setup);
  report.config["refine"] = attack_echo(opts.refine);
  report.config["tau_safety"] = opts.tau_safety ? ordered_json(*opts.tau_safety) : ordered_json(nullptr);
  report.config["tau_security"] =
      opts.tau_security ? ordered_json(*opts.tau_security) : ordered_json(nullptr);
  merge_echo(report.config, opts.config_echo);

  const AttackerSimReport sim = run_attacker_sim(opts);
  auto flag = [](const std::optional<bool>& b) { return b ? ordered_json(*b) : ordered_json(nullptr); };
  ordered_json& d = report.details;
  d["candidate_scores"] = sim.candidate_scores;
  d["selected_index"] = sim.selected_index;
  d["selected_score"] = sim.selected_score;
  d["refined_score"] = sim.refined_score;
  d["refine_best_iteration"] = sim.refinement.best_iteration;
  d["refine_linf"] = sim.refinement.linf_norm;
  d["selected_clears_safety"] = flag(sim.selected_clears_safety);
  d["refined_clears_safety"] = flag(sim.refined_clears_safety);
  d["selected_clears_security"] = flag(sim.selected_clears_security);
  d["refined_clears_security"] = flag(sim.refined_clears_security);
  finalize_report(report);
  return report;
}

// --- video -----------------------------------------------------------------------

RunReport cmd_video(const VideoOptions& opts) {
  const std::vector<VideoRecord> videos = load_video_manifest(opts.manifest);
  RunReport report;
  report.command = "video";
  report.config["manifest"] = opts.manifest.generic_string();
  report.config["scoring"] = setup_echo(opts.setup);
  report.config["tau"] = opts.tau ? ordered_json(*opts.tau) : ordered_json(nullptr);
  report.config["sample_count"] = opts.sample_count;
  merge_echo(report.config, opts.config_echo);
  report.metadata["channels"] = channel_conventions();
  report.tau = opts.tau;

  std::vector<std::string> ids;
  for (const auto& v : videos) ids.push_back(v.video_id);
  std::vector<Outcome> outcomes;
  run_items(videos.size(), opts.setup, ids, outcomes, [&](std::size_t i, Outcome& out) {
    const VideoRecord& v = videos[i];
    const FramePlan plan = plan_frames(static_cast<int>(v.frames.size()), opts.sample_count);
    std::vector<double> frame_scores;
    MetricVector mean_metrics{0.0, 0.0, 0.0, 0.0};
    double mean_composite = 0.0;
    for (int idx : plan.indices) {
      const auto k = static_cast<std::size_t>(idx);
      const ImageBuffer x = load_image(v.resolve(v.frames[k]));
      ImageBuffer x_inv;
      if (v.inverted_frames) {
        x_inv = load_image(v.resolve((*v.inverted_frames)[k]));
      } else if (opts.setup.inverter) {
        x_inv = opts.setup.inverter->invert(x);
      } else {
        throw Error(ErrorCode::ProviderUnavailable,
                    "video \"" + v.video_id + "\" has no inverted frames and no live inverter");
      }
      const MetricVector m = metric_vector(x, x_inv, opts.setup.providers);
      const double s = composite_score(m, opts.setup.weights);
      frame_scores.push_back(a_index(s, opts.setup.weights));
      mean_metrics.psnr += m.psnr;
      mean_metrics.ssim += m.ssim;
      mean_metrics.lpips += m.lpips;
      mean_metrics.clip_sim += m.clip_sim;
      mean_composite += s;
    }
    const double n = static_cast<double>(frame_scores.size());
    mean_metrics = {mean_metrics.psnr / n, mean_metrics.ssim / n, mean_metrics.lpips / n,
                    mean_metrics.clip_sim / n};
    ScoreSample sample;
    sample.record_id = v.video_id;
    sample.label = v.label;
    sample.generator = v.extra.value("generator", std::string());
    sample.metrics = mean_metrics;
    sample.composite = mean_composite / n;
    sample.a_index = video_a_index(frame_scores);
    out.sample = std::move(sample);
    ordered_json row;
    row["id"] = v.video_id;
    row["total_frames"] = plan.total_frames;
    row["frame_indices"] = plan.indices;
    row["frame_a_index"] = frame_scores;
    row["video_a_index"] = out.sample->a_index;
    out.row = std::move(row);
  });
  ordered_json rows;
  merge_outcomes(outcomes, report, &rows);
  report.details["videos"] = std::move(rows);
  finalize_report(report);
  return report;
}

// --- report ----------------------------------------------------------------------

RunReport cmd_report(const ReportOptions& opts) {
  RunReport report;
  report.command = "report";
  report.config["score_table"] = opts.score_table.generic_string();
  report.config["tau"] = opts.tau ? ordered_json(*opts.tau) : ordered_json(nullptr);
  report.config["thresholds"] = thresholds_to_json(opts.registry)["entries"];
  merge_echo(report.config, opts.config_echo);
  report.tau = opts.tau;
  report.scores = read_score_table(opts.score_table);

  ordered_json per_threshold = ordered_json::object();
  for (const auto& [tag, entry] : opts.registry) {
    ordered_json j;
    j["tau_safety"] = summary_to_json(summarize(report.scores, entry.tau_safety));
    j["tau_security"] = entry.tau_security
                            ? summary_to_json(summarize(report.scores, *entry.tau_security))
                            : ordered_json(nullptr);
    per_threshold[tag] = std::move(j);
  }
  report.details["per_threshold"] = std::move(per_threshold);
  finalize_report(report);
  return report;
}

}  // namespace aidx
