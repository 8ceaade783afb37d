#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aindex/adversary.hpp"
#include "aindex/calibrate.hpp"
#include "aindex/error.hpp"
#include "aindex/index.hpp"
#include "aindex/inverters.hpp"
#include "aindex/json.hpp"
#include "aindex/manifest.hpp"
#include "aindex/metrics.hpp"

namespace aidx {

// --- Summaries ---------------------------------------------------------------

struct ClassCounts {
  std::size_t total = 0;
  std::size_t authentic = 0;
  std::size_t plausibly_deniable = 0;
};

// "Positive" = real; a record is predicted real when classified Authentic.
struct Summary {
  ClassCounts real;
  ClassCounts fake;
  std::optional<double> tau;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> auc;
};

Summary summarize(std::span<const ScoreSample> samples, std::optional<double> tau);

// Mann-Whitney estimate of P(real score > fake score), ties count one half.
double auc_rank_sum(std::span<const double> real_scores, std::span<const double> fake_scores);

struct Histogram {
  static constexpr int kBins = 64;
  std::array<std::size_t, kBins> real{};
  std::array<std::size_t, kBins> fake{};
};

// Fixed bins over [0, 1]; 1.0 lands in the last bin.
Histogram histogram(std::span<const ScoreSample> samples);

// Per-class attack accounting, counted over records correctly classified
// before the attack.
struct AttackTally {
  std::size_t total = 0;
  std::size_t correct_before = 0;
  std::size_t correct_after = 0;
  std::size_t flipped = 0;  // correct before, wrong after
  std::optional<double> success_rate() const;
};

struct AttackSummary {
  AttackTally real;
  AttackTally fake;
  std::optional<double> accuracy_before;
  std::optional<double> accuracy_after;
};

// --- Reports -----------------------------------------------------------------

struct RecordError {
  std::string record_id;
  ErrorCode code = ErrorCode::InvalidArgument;
  std::string message;
};

struct RunReport {
  std::string run_id;
  std::string command;
  ordered_json config = ordered_json::object();
  ordered_json metadata = ordered_json::object();
  std::vector<ScoreSample> scores;  // sorted by record_id
  std::optional<double> tau;
  std::vector<RecordError> errors;
  std::vector<std::string> warnings;
  Summary summary;
  Histogram hist;
  ordered_json details = ordered_json::object();  // command-specific rows

  bool total_failure() const { return scores.empty() && !errors.empty(); }
};

// Fills summary, histogram and run_id (a hash of the config echo).
void finalize_report(RunReport& report);

ordered_json summary_to_json(const Summary& s);
ordered_json attack_summary_to_json(const AttackSummary& s);
ordered_json report_to_json(const RunReport& report);
void write_report(const RunReport& report, const std::filesystem::path& path);

// CSV: id,label,generator,psnr,ssim,lpips,clip,composite,a_index,decision.
// Numbers use the shortest round-trip decimal form.
void write_score_table(std::span<const ScoreSample> samples, std::optional<double> tau,
                       std::ostream& out);
void write_score_table(std::span<const ScoreSample> samples, std::optional<double> tau,
                       const std::filesystem::path& path);
std::vector<ScoreSample> read_score_table(const std::filesystem::path& path);

std::string format_number(double v);

// --- Weights, thresholds, calibration files ------------------------------------

ordered_json weights_to_json(const WeightVector& w);
WeightVector weights_from_json(const ordered_json& j);
// Accepts a bare weights document or a calibration result.
WeightVector load_weights(const std::filesystem::path& path);

struct ThresholdEntry {
  double tau_safety = 0.0;
  std::optional<double> tau_security;
};

using ThresholdRegistry = std::map<std::string, ThresholdEntry>;

// Accepts a registry document or a calibration result (one entry keyed by
// its generator tag).
ThresholdRegistry load_thresholds(const std::filesystem::path& path);
ordered_json thresholds_to_json(const ThresholdRegistry& registry);
void save_thresholds(const ThresholdRegistry& registry, const std::filesystem::path& path);

// The entry for tag, or the only entry when tag is empty.
ThresholdEntry select_threshold(const ThresholdRegistry& registry, const std::string& tag);

ordered_json calibration_to_json(const CalibrationResult& result);
CalibrationResult calibration_from_json(const ordered_json& j);

// --- Execution -----------------------------------------------------------------

// Runs fn(i) for i in [0, n) on up to `workers` threads. fn must not throw.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

struct ScoringSetup {
  WeightVector weights = WeightVector::published();
  MetricProviders providers = MetricProviders::reference();
  std::shared_ptr<const Inverter> inverter;  // live inversion when no file is given
  int workers = 1;
};

// Metrics for one record. Precomputed channels win; a complete set never
// touches the image files. An inverted file wins over a live inverter.
MetricVector record_metrics(const PairRecord& rec, const ScoringSetup& setup,
                            std::vector<std::string>* warnings = nullptr);

ScoreSample score_record(const PairRecord& rec, const ScoringSetup& setup,
                         std::vector<std::string>* warnings = nullptr);

// --- Commands --------------------------------------------------------------------

struct ScoreOptions {
  std::filesystem::path manifest;
  ScoringSetup setup;
  std::optional<double> tau;
  ordered_json config_echo = ordered_json::object();
};

RunReport cmd_score(const ScoreOptions& opts);

struct CalibrateOptions {
  std::vector<std::filesystem::path> manifests;  // labels come from the records
  ScoringSetup setup;
  DeConfig de;
  double sigma = 0.9;
  double fpr = 0.01;
  std::string generator_tag;
  std::optional<AttackConfig> attack;  // enables tau_security
  ordered_json config_echo = ordered_json::object();
};

struct CalibrateOutcome {
  CalibrationResult result;
  RunReport report;
};

CalibrateOutcome cmd_calibrate(const CalibrateOptions& opts);

struct AttackOptions {
  std::filesystem::path manifest;
  ScoringSetup setup;
  double tau = 0.0;
  AttackConfig attack;
  // Unset: fakes are pushed up (maximize), reals pushed down (minimize).
  std::optional<AttackDirection> forced_direction;
  std::optional<std::filesystem::path> dump_dir;
  ordered_json config_echo = ordered_json::object();
};

RunReport cmd_attack(const AttackOptions& opts);

// Recomputes the attack accounting from a cmd_attack report's rows.
AttackSummary attack_summary_from_rows(const ordered_json& rows, double tau);

struct AttackerSimOptions {
  std::string prompt_tag;
  int n_candidates = 100;
  int height = 32;
  int width = 32;
  int channels = 3;
  AttackConfig refine;
  ScoringSetup setup;
  std::optional<double> tau_safety;
  std::optional<double> tau_security;
  ordered_json config_echo = ordered_json::object();
};

AttackerSimReport run_attacker_sim(const AttackerSimOptions& opts);
RunReport cmd_attacker_sim(const AttackerSimOptions& opts);

struct VideoOptions {
  std::filesystem::path manifest;
  ScoringSetup setup;
  std::optional<double> tau;
  int sample_count = 8;
  ordered_json config_echo = ordered_json::object();
};

RunReport cmd_video(const VideoOptions& opts);

struct ReportOptions {
  std::filesystem::path score_table;
  ThresholdRegistry registry;
  std::optional<double> tau;
  ordered_json config_echo = ordered_json::object();
};

// Re-summarizes a score table, and counts records at or above every
// registry threshold.
RunReport cmd_report(const ReportOptions& opts);

}  // namespace aidx
