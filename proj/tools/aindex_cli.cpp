// aindex command-line entry point.
// Exit codes: 0 success, 1 total failure (nothing scored, or the data cannot
// be calibrated), 2 configuration error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aindex/error.hpp"
#include "aindex/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct Common {
  std::string weights;
  std::string out;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string inverter = "external";
  double ref_fidelity = 0.6;
  double ref_blur = 1.5;
  double ref_noise = 0.0;
  int ssim_window = 11;
  double ssim_sigma = 1.5;
};

struct Thresholds {
  std::string file;
  std::string generator;
  std::optional<double> tau;
};

struct AttackFlags {
  double epsilon = 8.0 / 255.0;
  std::optional<double> step;
  int iterations = 40;
  std::string direction = "auto";
  std::string gradient = "analytic";
  int fd_samples = 512;
};

void add_common(CLI::App* app, Common& c, bool with_inverter) {
  app->add_option("--weights", c.weights, "weights JSON (or a calibration result); default: published");
  app->add_option("--out", c.out, "write the JSON report here instead of stdout");
  app->add_option("--seed", c.seed, "seed for the reference inverter noise, DE and attacks");
  app->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  app->add_option("--ssim-window", c.ssim_window, "SSIM Gaussian window length (odd)");
  app->add_option("--ssim-sigma", c.ssim_sigma, "SSIM Gaussian window sigma");
  if (!with_inverter) return;
  app->add_option("--inverter", c.inverter, "reference | external")
      ->check(CLI::IsMember({"reference", "external"}));
  app->add_option("--ref-fidelity", c.ref_fidelity, "reference inverter fidelity in [0,1]");
  app->add_option("--ref-blur", c.ref_blur, "reference inverter blur sigma (pixels)");
  app->add_option("--ref-noise", c.ref_noise, "reference inverter noise sigma (fraction of max)");
}

void add_thresholds(CLI::App* app, Thresholds& t) {
  app->add_option("--thresholds", t.file, "threshold registry or calibration result");
  app->add_option("--generator", t.generator, "registry entry to use");
  app->add_option_function<double>("--tau", [&t](const double& v) { t.tau = v; },
                                    "explicit threshold (overrides --thresholds)");
}

void add_attack(CLI::App* app, AttackFlags& a) {
  app->add_option("--epsilon", a.epsilon, "l-inf budget as a fraction of the pixel range");
  app->add_option_function<double>("--step", [&a](const double& v) { a.step = v; },
                                   "PGD step (default epsilon/4)");
  app->add_option("--iterations", a.iterations, "PGD iterations");
  app->add_option("--gradient", a.gradient, "analytic | finite_difference")
      ->check(CLI::IsMember({"analytic", "finite_difference"}));
  app->add_option("--fd-samples", a.fd_samples, "coordinates per finite-difference gradient");
}

aidx::ScoringSetup make_setup(const Common& c) {
  aidx::ScoringSetup s;
  if (!c.weights.empty()) s.weights = aidx::load_weights(c.weights);
  aidx::SsimConfig ssim;
  ssim.window = c.ssim_window;
  ssim.gaussian_sigma = c.ssim_sigma;
  ssim.validate();
  s.providers = aidx::MetricProviders::reference(ssim);
  s.workers = c.workers;
  if (c.inverter == "reference") {
    aidx::ReferenceInverterConfig cfg;
    cfg.fidelity = c.ref_fidelity;
    cfg.blur_sigma = c.ref_blur;
    cfg.noise_sigma = c.ref_noise;
    cfg.noise_seed = c.seed;
    cfg.validate();
    s.inverter = std::make_shared<aidx::ReferenceInverter>(cfg);
  }
  return s;
}

aidx::AttackConfig make_attack(const AttackFlags& a, std::uint64_t seed) {
  aidx::AttackConfig cfg = aidx::AttackConfig::with_epsilon(a.epsilon);
  if (a.step) cfg.step_size = *a.step;
  cfg.iterations = a.iterations;
  cfg.gradient_mode = aidx::parse_gradient_mode(a.gradient);
  cfg.fd_samples = a.fd_samples;
  cfg.rng_seed = seed;
  cfg.validate();
  return cfg;
}

std::optional<aidx::ThresholdEntry> resolve_thresholds(const Thresholds& t) {
  if (t.tau) return aidx::ThresholdEntry{*t.tau, std::nullopt};
  if (t.file.empty()) return std::nullopt;
  return aidx::select_threshold(aidx::load_thresholds(t.file), t.generator);
}

aidx::ordered_json file_echo(const Common& c, const Thresholds* t) {
  aidx::ordered_json j;
  j["weights_file"] = c.weights.empty() ? aidx::ordered_json(nullptr) : aidx::ordered_json(c.weights);
  j["seed"] = c.seed;
  if (t) {
    j["thresholds_file"] = t->file.empty() ? aidx::ordered_json(nullptr) : aidx::ordered_json(t->file);
    j["generator"] = t->generator;
  }
  return j;
}

void emit(const aidx::ordered_json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw aidx::Error(aidx::ErrorCode::IoError, "cannot write " + out);
  f << j.dump(2) << '\n';
}

int finish(const aidx::RunReport& report, const std::string& out) {
  emit(aidx::report_to_json(report), out);
  for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  for (const auto& e : report.errors) {
    std::fprintf(stderr, "error: %s: %s\n", e.record_id.c_str(), e.message.c_str());
  }
  return report.total_failure() ? kExitFailure : kExitOk;
}

// Errors that come from the data rather than from how the run was configured.
bool is_data_failure(aidx::ErrorCode code) {
  switch (code) {
    case aidx::ErrorCode::InsufficientSamples:
    case aidx::ErrorCode::DegenerateObjective:
    case aidx::ErrorCode::EmptyCandidateSet:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Authenticity index toolkit: score, calibrate, attack and report on image/inversion pairs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "aindex 1.0");

  Common common;
  Thresholds thr;
  AttackFlags atk;
  std::string manifest;
  std::string csv;
  int run_exit = kExitOk;
  std::function<int()> run;

  // score
  auto* score = app.add_subcommand("score", "score every pair in a manifest");
  add_common(score, common, true);
  add_thresholds(score, thr);
  score->add_option("--manifest", manifest, "pair manifest (JSONL)")->required();
  score->add_option("--csv", csv, "also write the per-record score table");
  score->callback([&] {
    run = [&] {
      aidx::ScoreOptions o;
      o.manifest = manifest;
      o.setup = make_setup(common);
      if (auto e = resolve_thresholds(thr)) o.tau = e->tau_safety;
      o.config_echo = file_echo(common, &thr);
      const auto report = aidx::cmd_score(o);
      if (!csv.empty()) aidx::write_score_table(report.scores, report.tau, csv);
      return finish(report, common.out);
    };
  });

  // calibrate
  std::vector<std::string> manifests;
  std::string generator;
  double fpr = 0.01;
  double sigma = 0.9;
  aidx::DeConfig de;
  bool with_attack = false;
  std::string report_out;
  auto* cal = app.add_subcommand("calibrate", "fit weights and thresholds on labelled manifests");
  add_common(cal, common, true);
  add_attack(cal, atk);
  cal->add_option("--manifest", manifests, "labelled pair manifest; repeat for several files")->required();
  cal->add_option("--generator", generator, "generator tag the thresholds are stored under");
  cal->add_option("--fpr", fpr, "false-positive-rate target")->check(CLI::Range(0.0, 1.0));
  cal->add_option("--sigma", sigma, "sigmoid scale, held fixed");
  cal->add_option("--population", de.population, "DE population size");
  cal->add_option("--generations", de.max_iterations, "DE generation limit");
  cal->add_option("--mutation", de.mutation_f, "DE mutation factor F");
  cal->add_option("--crossover", de.crossover_cr, "DE crossover rate CR");
  cal->add_option("--tolerance", de.tolerance, "DE convergence tolerance");
  cal->add_flag("--attack", with_attack, "attack the fakes and derive tau_security (needs --inverter reference)");
  cal->add_option("--report", report_out, "also write the run report JSON");
  cal->callback([&] {
    run = [&] {
      aidx::CalibrateOptions o;
      for (const auto& m : manifests) o.manifests.emplace_back(m);
      o.setup = make_setup(common);
      de.rng_seed = common.seed;
      o.de = de;
      o.sigma = sigma;
      o.fpr = fpr;
      o.generator_tag = generator;
      if (with_attack) o.attack = make_attack(atk, common.seed);
      o.config_echo = file_echo(common, nullptr);
      const auto outcome = aidx::cmd_calibrate(o);
      emit(aidx::calibration_to_json(outcome.result), common.out);
      if (!report_out.empty()) emit(aidx::report_to_json(outcome.report), report_out);
      return outcome.report.total_failure() ? kExitFailure : kExitOk;
    };
  });

  // attack
  std::string dump_dir;
  auto* attack = app.add_subcommand("attack", "PGD attack on every record against a threshold");
  add_common(attack, common, true);
  add_thresholds(attack, thr);
  add_attack(attack, atk);
  attack->add_option("--manifest", manifest, "pair manifest (JSONL)")->required();
  attack->add_option("--direction", atk.direction, "auto | maximize | minimize")
      ->check(CLI::IsMember({"auto", "maximize", "minimize"}));
  attack->add_option("--dump-dir", dump_dir, "write original, adversarial and amplified-delta PNGs");
  attack->callback([&] {
    run = [&] {
      aidx::AttackOptions o;
      o.manifest = manifest;
      o.setup = make_setup(common);
      const auto t = resolve_thresholds(thr);
      if (!t) throw aidx::Error(aidx::ErrorCode::InvalidArgument, "attack needs --tau or --thresholds");
      o.tau = t->tau_safety;
      o.attack = make_attack(atk, common.seed);
      if (atk.direction != "auto") o.forced_direction = aidx::parse_direction(atk.direction);
      if (!dump_dir.empty()) o.dump_dir = dump_dir;
      o.config_echo = file_echo(common, &thr);
      return finish(aidx::cmd_attack(o), common.out);
    };
  });

  // attacker-sim
  aidx::AttackerSimOptions sim;
  int size = 32;
  auto* asim = app.add_subcommand("attacker-sim", "best-of-N candidate selection plus PGD refinement");
  add_common(asim, common, true);
  add_thresholds(asim, thr);
  add_attack(asim, atk);
  asim->add_option("--prompt", sim.prompt_tag, "prompt tag keying the synthetic candidates")->required();
  asim->add_option("--n-candidates", sim.n_candidates, "number of candidates")->check(CLI::PositiveNumber);
  asim->add_option("--size", size, "candidate height and width")->check(CLI::PositiveNumber);
  asim->add_option("--channels", sim.channels, "1 or 3")->check(CLI::IsMember({1, 3}));
  asim->callback([&] {
    run = [&] {
      sim.height = sim.width = size;
      sim.setup = make_setup(common);
      sim.refine = make_attack(atk, common.seed);
      if (auto t = resolve_thresholds(thr)) {
        sim.tau_safety = t->tau_safety;
        sim.tau_security = t->tau_security;
      }
      sim.config_echo = file_echo(common, &thr);
      return finish(aidx::cmd_attacker_sim(sim), common.out);
    };
  });

  // video
  int frames = 8;
  auto* video = app.add_subcommand("video", "score videos from pre-extracted frames");
  add_common(video, common, true);
  add_thresholds(video, thr);
  video->add_option("--manifest", manifest, "video manifest (JSONL)")->required();
  video->add_option("--frames", frames, "frames sampled per video")->check(CLI::PositiveNumber);
  video->add_option("--csv", csv, "also write the per-video score table");
  video->callback([&] {
    run = [&] {
      aidx::VideoOptions o;
      o.manifest = manifest;
      o.setup = make_setup(common);
      if (auto e = resolve_thresholds(thr)) o.tau = e->tau_safety;
      o.sample_count = frames;
      o.config_echo = file_echo(common, &thr);
      const auto report = aidx::cmd_video(o);
      if (!csv.empty()) aidx::write_score_table(report.scores, report.tau, csv);
      return finish(report, common.out);
    };
  });

  // report
  std::string scores;
  auto* rep = app.add_subcommand("report", "re-summarize a score table against thresholds");
  rep->add_option("--scores", scores, "score table CSV")->required();
  rep->add_option("--out", common.out, "write the JSON report here instead of stdout");
  add_thresholds(rep, thr);
  rep->callback([&] {
    run = [&] {
      aidx::ReportOptions o;
      o.score_table = scores;
      if (!thr.file.empty()) o.registry = aidx::load_thresholds(thr.file);
      if (thr.tau) {
        o.tau = thr.tau;
      } else if (!thr.generator.empty()) {
        o.tau = aidx::select_threshold(o.registry, thr.generator).tau_safety;
      }
      aidx::ordered_json echo;
      echo["thresholds_file"] = thr.file.empty() ? aidx::ordered_json(nullptr) : aidx::ordered_json(thr.file);
      echo["generator"] = thr.generator;
      o.config_echo = echo;
      return finish(aidx::cmd_report(o), common.out);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    run_exit = run();
  } catch (const aidx::Error& e) {
    std::fprintf(stderr, "aindex: %s\n", e.what());
    return is_data_failure(e.code()) ? kExitFailure : kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "aindex: %s\n", e.what());
    return kExitConfig;
  }
  return run_exit;
}
