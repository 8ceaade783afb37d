#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "aindex/error.hpp"
#include "aindex/pipeline.hpp"
#include "aindex/synthetic.hpp"
#include "aindex/video.hpp"
#include "corpora.hpp"
#include "oracles.hpp"

using aidx::ImageBuffer;
using aidx::Label;
using aidx::ordered_json;

namespace {

// Independent recomputation of a report's summary and histogram from its rows.
void expect_self_consistent(const ordered_json& report) {
  const auto& rows = report["records"];
  const auto& summary = report["summary"];
  std::size_t n_real = 0, n_fake = 0, real_auth = 0, fake_auth = 0;
  std::vector<double> real, fake;
  std::vector<std::size_t> hist_real(64), hist_fake(64);
  for (const auto& r : rows) {
    const bool is_real = r["label"] == "real";
    const double a = r["a_index"].get<double>();
    (is_real ? real : fake).push_back(a);
    (is_real ? n_real : n_fake)++;
    const auto bin = static_cast<std::size_t>(std::min(63, static_cast<int>(a * 64)));
    (is_real ? hist_real : hist_fake)[bin]++;
    if (!summary["tau"].is_null()) {
      const bool authentic = a >= summary["tau"].get<double>();
      EXPECT_EQ(r["decision"], authentic ? "authentic" : "plausibly_deniable");
      if (authentic) (is_real ? real_auth : fake_auth)++;
    }
  }
  EXPECT_EQ(summary["real"]["total"], n_real);
  EXPECT_EQ(summary["fake"]["total"], n_fake);
  EXPECT_EQ(report["histogram"]["real"].get<std::vector<std::size_t>>(), hist_real);
  EXPECT_EQ(report["histogram"]["fake"].get<std::vector<std::size_t>>(), hist_fake);
  if (!summary["tau"].is_null()) {
    EXPECT_EQ(summary["real"]["authentic"], real_auth);
    EXPECT_EQ(summary["fake"]["authentic"], fake_auth);
    EXPECT_EQ(summary["real"]["plausibly_deniable"], n_real - real_auth);
    if (n_real + n_fake > 0) {
      EXPECT_NEAR(summary["accuracy"].get<double>(),
                  static_cast<double>(real_auth + n_fake - fake_auth) / static_cast<double>(n_real + n_fake),
                  1e-15);
    }
    if (real_auth + fake_auth > 0) {
      EXPECT_NEAR(summary["precision"].get<double>(),
                  static_cast<double>(real_auth) / static_cast<double>(real_auth + fake_auth), 1e-15);
    }
    if (n_real > 0) {
      EXPECT_NEAR(summary["recall"].get<double>(),
                  static_cast<double>(real_auth) / static_cast<double>(n_real), 1e-15);
    }
  }
  if (!real.empty() && !fake.empty()) {
    EXPECT_NEAR(summary["auc"].get<double>(), oracle::pair_auc(real, fake), 1e-12);
  } else {
    EXPECT_TRUE(summary["auc"].is_null());
  }
}

void write_identity_manifest(const std::filesystem::path& dir, int n) {
  std::ofstream out(dir / "m.jsonl");
  for (int i = 0; i < n; ++i) {
    const std::string name = "id" + std::to_string(i) + ".png";
    aidx::save_image(aidx::make_natural_image(20, 20, 3, 50 + i), dir / name);
    out << R"({"id":"r)" << i << R"(","original":")" << name << R"(","inverted":")" << name
        << R"(","label":")" << (i % 2 ? "fake" : "real") << R"(","generator":"g"})" << '\n';
  }
}

aidx::ScoringSetup reference_setup(double fidelity = 0.6) {
  aidx::ScoringSetup s;
  aidx::ReferenceInverterConfig cfg;
  cfg.fidelity = fidelity;
  cfg.noise_sigma = 0.01;
  s.inverter = std::make_shared<aidx::ReferenceInverter>(cfg);
  return s;
}

}  // namespace

// --- Summaries and formats -----------------------------------------------------------

TEST(Summary, AucMatchesPairOracle) {
  std::vector<double> real{0.1, 0.4, 0.4, 0.9}, fake{0.05, 0.4, 0.3};
  EXPECT_NEAR(aidx::auc_rank_sum(real, fake), oracle::pair_auc(real, fake), 1e-15);
  std::vector<double> hi{0.8, 0.9}, lo{0.1, 0.2};
  EXPECT_EQ(aidx::auc_rank_sum(hi, lo), 1.0);
  EXPECT_EQ(aidx::auc_rank_sum(lo, hi), 0.0);
  EXPECT_THROW(aidx::auc_rank_sum(hi, std::vector<double>{}), aidx::Error);
}

TEST(Summary, HistogramEdges) {
  std::vector<aidx::ScoreSample> s(3);
  s[0].a_index = 0.0;
  s[1].a_index = 1.0;
  s[2].a_index = 0.5;
  s[2].label = Label::Fake;
  const auto h = aidx::histogram(s);
  EXPECT_EQ(h.real[0], 1u);
  EXPECT_EQ(h.real[63], 1u);
  EXPECT_EQ(h.fake[32], 1u);
}

TEST(Summary, AttackTallyFromRows) {
  ordered_json rows = ordered_json::parse(R"([
    {"label":"fake","a_index_before":0.01,"a_index_after":0.05},
    {"label":"fake","a_index_before":0.01,"a_index_after":0.02},
    {"label":"fake","a_index_before":0.06,"a_index_after":0.07},
    {"label":"real","a_index_before":0.05,"a_index_after":0.01},
    {"label":"real","a_index_before":0.02,"a_index_after":0.01}
  ])");
  const auto s = aidx::attack_summary_from_rows(rows, 0.04);
  EXPECT_EQ(s.fake.total, 3u);
  EXPECT_EQ(s.fake.correct_before, 2u);  // the 0.06 fake is excluded from the denominator
  EXPECT_EQ(s.fake.flipped, 1u);
  EXPECT_EQ(*s.fake.success_rate(), 0.5);
  EXPECT_EQ(s.real.correct_before, 1u);
  EXPECT_EQ(*s.real.success_rate(), 1.0);
  EXPECT_EQ(*s.accuracy_before, 3.0 / 5.0);
  EXPECT_EQ(*s.accuracy_after, 1.0 / 5.0);
}

TEST(ScoreTable, ShortestRoundTripNumbers) {
  EXPECT_EQ(aidx::format_number(0.1), "0.1");
  EXPECT_EQ(aidx::format_number(100.0), "100");
  EXPECT_EQ(aidx::format_number(0.038412597405586335), "0.038412597405586335");
  oracle::TempDir dir("csv");
  std::vector<aidx::ScoreSample> s(2);
  s[0] = aidx::make_score_sample("a,b", Label::Real, "gen \"x\"", {31.7, 0.8, 0.2, 0.9},
                                 aidx::WeightVector::published());
  s[1] = aidx::make_score_sample("c", Label::Fake, "g", {1.0 / 3.0, 0.1, 0.7, -0.2},
                                 aidx::WeightVector::published());
  aidx::write_score_table(s, 0.03, dir / "t.csv");
  const auto back = aidx::read_score_table(dir / "t.csv");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].record_id, s[i].record_id);
    EXPECT_EQ(back[i].generator, s[i].generator);
    EXPECT_EQ(back[i].metrics.psnr, s[i].metrics.psnr);
    EXPECT_EQ(back[i].metrics.clip_sim, s[i].metrics.clip_sim);
    EXPECT_EQ(back[i].a_index, s[i].a_index);
  }
  oracle::write_file(dir / "bad.csv", "id,label\n");
  EXPECT_THROW(aidx::read_score_table(dir / "bad.csv"), aidx::Error);
}

TEST(ConfigFiles, WeightsThresholdsCalibrationRoundTrip) {
  oracle::TempDir dir("cfg");
  const auto w = aidx::WeightVector::published();
  oracle::write_file(dir / "w.json", aidx::weights_to_json(w).dump());
  EXPECT_EQ(aidx::load_weights(dir / "w.json"), w);
  oracle::write_file(dir / "bad.json", R"({"alpha1":1})");
  EXPECT_THROW(aidx::load_weights(dir / "bad.json"), aidx::Error);

  aidx::ThresholdRegistry reg{{"A", {0.01, 0.02}}, {"B", {0.03, std::nullopt}}};
  aidx::save_thresholds(reg, dir / "t.json");
  const auto back = aidx::load_thresholds(dir / "t.json");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.at("A").tau_security, 0.02);
  EXPECT_FALSE(back.at("B").tau_security);
  EXPECT_EQ(aidx::select_threshold(back, "B").tau_safety, 0.03);
  EXPECT_THROW(aidx::select_threshold(back, ""), aidx::Error);
  EXPECT_THROW(aidx::select_threshold(back, "C"), aidx::Error);

  aidx::CalibrationResult cal;
  cal.weights = {0.1, 2.0 / 3.0, -1.5, 4.0, 0.9};
  cal.overlap = 0.0123;
  cal.tau_safety = 0.04;
  cal.tau_security = 0.05;
  cal.generator_tag = "gen";
  cal.de_config.rng_seed = 99;
  cal.de_generations = 17;
  cal.fake_scores.push_back(
      aidx::make_score_sample("f", Label::Fake, "gen", {20, 0.5, 0.3, 0.8}, cal.weights));
  oracle::write_file(dir / "cal.json", aidx::calibration_to_json(cal).dump(2));
  const auto cal_back = aidx::calibration_from_json(ordered_json::parse(oracle::read_file(dir / "cal.json")));
  EXPECT_EQ(cal_back.weights, cal.weights);
  EXPECT_EQ(cal_back.tau_security, cal.tau_security);
  EXPECT_EQ(cal_back.de_config.rng_seed, 99u);
  ASSERT_EQ(cal_back.fake_scores.size(), 1u);
  EXPECT_EQ(cal_back.fake_scores[0].a_index, cal.fake_scores[0].a_index);
  EXPECT_EQ(aidx::load_weights(dir / "cal.json"), cal.weights);
  const auto from_cal = aidx::load_thresholds(dir / "cal.json");
  EXPECT_EQ(from_cal.at("gen").tau_safety, 0.04);
}

TEST(ParallelFor, CoversEveryIndexOnce) {
  for (int workers : {1, 2, 5}) {
    std::vector<int> hits(37, 0);
    aidx::parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i]++; });
    EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 37);
  }
}

// --- score ------------------------------------------------------------------------

TEST(CmdScore, IdentityPairs) {
  oracle::TempDir dir("score_id");
  write_identity_manifest(dir.path(), 4);
  aidx::ScoreOptions opts;
  opts.manifest = dir / "m.jsonl";
  const auto report = aidx::cmd_score(opts);
  ASSERT_EQ(report.scores.size(), 4u);
  EXPECT_TRUE(report.errors.empty());
  for (const auto& s : report.scores) {
    EXPECT_NEAR(s.a_index, 0.038412597405586335, 1e-9);
    EXPECT_EQ(s.a_index, aidx::a_index(aidx::composite_score(s.metrics, opts.setup.weights),
                                       opts.setup.weights));
  }
  expect_self_consistent(aidx::report_to_json(report));
}

TEST(CmdScore, EmptyManifest) {
  oracle::TempDir dir("score_empty");
  oracle::write_file(dir / "m.jsonl", "");
  aidx::ScoreOptions opts;
  opts.manifest = dir / "m.jsonl";
  const auto report = aidx::cmd_score(opts);
  EXPECT_TRUE(report.scores.empty());
  EXPECT_TRUE(report.errors.empty());
  EXPECT_FALSE(report.total_failure());
}

TEST(CmdScore, PartialFailure) {
  oracle::TempDir dir("score_partial");
  write_identity_manifest(dir.path(), 3);
  oracle::write_file(dir / "id1.png", "garbage");
  aidx::ScoreOptions opts;
  opts.manifest = dir / "m.jsonl";
  opts.tau = 0.03;
  const auto report = aidx::cmd_score(opts);
  EXPECT_EQ(report.scores.size(), 2u);
  ASSERT_EQ(report.errors.size(), 1u);
  EXPECT_EQ(report.errors[0].record_id, "r1");
  EXPECT_FALSE(report.total_failure());
  expect_self_consistent(aidx::report_to_json(report));

  std::filesystem::remove(dir / "id0.png");
  std::filesystem::remove(dir / "id2.png");
  EXPECT_TRUE(aidx::cmd_score(opts).total_failure());
}

TEST(CmdScore, PrecomputedNeverTouchesImages) {
  oracle::TempDir dir("score_pre");
  oracle::write_file(dir / "m.jsonl",
                     R"({"id":"p","original":"missing.png","label":"real","generator":"g","precomputed":{"psnr":100,"ssim":1,"lpips":0,"clip":1}})"
                     "\n");
  aidx::ScoreOptions opts;
  opts.manifest = dir / "m.jsonl";
  const auto report = aidx::cmd_score(opts);
  ASSERT_EQ(report.scores.size(), 1u);
  EXPECT_EQ(report.scores[0].a_index, 0.038412597405586335);
}

TEST(CmdScore, MissingInversionWithoutInverterIsRecordError) {
  oracle::TempDir dir("score_noinv");
  aidx::save_image(aidx::make_natural_image(20, 20, 3, 1), dir / "a.png");
  oracle::write_file(dir / "m.jsonl", R"({"id":"a","original":"a.png","label":"real","generator":"g"})");
  aidx::ScoreOptions opts;
  opts.manifest = dir / "m.jsonl";
  const auto report = aidx::cmd_score(opts);
  ASSERT_EQ(report.errors.size(), 1u);
  EXPECT_EQ(report.errors[0].code, aidx::ErrorCode::ProviderUnavailable);

  opts.setup = reference_setup();
  const auto live = aidx::cmd_score(opts);
  EXPECT_EQ(live.scores.size(), 1u);
}

TEST(CmdScore, FileWinsOverLiveInverterWithWarning) {
  oracle::TempDir dir("score_warn");
  write_identity_manifest(dir.path(), 1);
  aidx::ScoreOptions opts;
  opts.manifest = dir / "m.jsonl";
  opts.setup = reference_setup();
  const auto report = aidx::cmd_score(opts);
  ASSERT_EQ(report.scores.size(), 1u);
  EXPECT_NEAR(report.scores[0].a_index, 0.038412597405586335, 1e-9);
  EXPECT_EQ(report.warnings.size(), 1u);
}

TEST(CmdScore, DeterministicAcrossWorkerCounts) {
  oracle::TempDir dir("score_det");
  corpora::PairCorpusSpec spec;
  spec.prefix = "d";
  spec.count = 9;
  spec.noise_sigma = 0.02;
  corpora::write_pair_corpus(dir / "img", dir / "m.jsonl", spec);
  std::string tables[3];
  std::string reports[3];
  int i = 0;
  for (int workers : {1, 3, 1}) {
    aidx::ScoreOptions opts;
    opts.manifest = dir / "m.jsonl";
    opts.setup.workers = workers;
    opts.tau = 0.03;
    const auto r = aidx::cmd_score(opts);
    std::ostringstream csv;
    aidx::write_score_table(r.scores, r.tau, csv);
    tables[i] = csv.str();
    auto j = aidx::report_to_json(r);
    reports[i] = j["records"].dump() + j["summary"].dump();
    ++i;
  }
  EXPECT_EQ(tables[0], tables[1]);
  EXPECT_EQ(tables[0], tables[2]);
  EXPECT_EQ(reports[0], reports[1]);
}

// --- calibrate ----------------------------------------------------------------------

class CalibrateCorpus : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new oracle::TempDir("calibrate");
    corpora::PairCorpusSpec real;
    real.prefix = "real";
    real.count = 100;
    real.label = Label::Real;
    real.fidelity = 0.3;
    real.noise_sigma = 0.03;
    real.seed = 1;
    real.size = 20;
    corpora::write_pair_corpus(dir_->path() / "real", dir_->path() / "real.jsonl", real);
    corpora::PairCorpusSpec fake = real;
    fake.prefix = "fake";
    fake.label = Label::Fake;
    fake.fidelity = 0.95;
    fake.seed = 2;
    corpora::write_pair_corpus(dir_->path() / "fake", dir_->path() / "fake.jsonl", fake);
    fake.prefix = "heldout";
    fake.seed = 3;
    corpora::write_pair_corpus(dir_->path() / "heldout", dir_->path() / "heldout.jsonl", fake);
  }
  static void TearDownTestSuite() { delete dir_; }

  static aidx::CalibrateOptions options() {
    aidx::CalibrateOptions opts;
    opts.manifests = {dir_->path() / "real.jsonl", dir_->path() / "fake.jsonl"};
    opts.de.rng_seed = 7;
    opts.de.max_iterations = 120;
    opts.generator_tag = "reference";
    return opts;
  }

  static oracle::TempDir* dir_;
};

oracle::TempDir* CalibrateCorpus::dir_ = nullptr;

TEST_F(CalibrateCorpus, SeparatesAndControlsHeldOutFpr) {
  const auto out = aidx::cmd_calibrate(options());
  const auto& cal = out.result;
  EXPECT_LE(cal.overlap, 0.1);
  EXPECT_EQ(cal.real_scores.size(), 100u);
  EXPECT_EQ(cal.fake_scores.size(), 100u);
  EXPECT_GT(oracle::pair_auc(aidx::a_indices(cal.real_scores), aidx::a_indices(cal.fake_scores)), 0.5);
  EXPECT_LT(cal.tau_safety, 1.0);
  EXPECT_LE(aidx::false_positive_rate(aidx::a_indices(cal.fake_scores), cal.tau_safety), 0.01);
  EXPECT_NEAR(aidx::overlap_estimate(aidx::a_indices(cal.real_scores), aidx::a_indices(cal.fake_scores)),
              cal.overlap, 1e-12);

  aidx::ScoreOptions held;
  held.manifest = dir_->path() / "heldout.jsonl";
  held.setup.weights = cal.weights;
  held.tau = cal.tau_safety;
  const auto report = aidx::cmd_score(held);
  ASSERT_EQ(report.scores.size(), 100u);
  EXPECT_LE(aidx::false_positive_rate(aidx::a_indices(report.scores), cal.tau_safety), 0.01);
  expect_self_consistent(aidx::report_to_json(out.report));
}

TEST_F(CalibrateCorpus, ZeroIterationAttackKeepsThreshold) {
  auto opts = options();
  opts.de.max_iterations = 30;
  opts.setup = reference_setup();
  aidx::AttackConfig attack;
  attack.iterations = 0;
  opts.attack = attack;
  const auto out = aidx::cmd_calibrate(opts);
  ASSERT_TRUE(out.result.tau_security);
  EXPECT_EQ(*out.result.tau_security, out.result.tau_safety);
  EXPECT_EQ(out.result.attacked_fake_scores.size(), 100u);
}

TEST_F(CalibrateCorpus, AttackNeedsLiveInverter) {
  auto opts = options();
  opts.attack = aidx::AttackConfig{};
  try {
    aidx::cmd_calibrate(opts);
    FAIL();
  } catch (const aidx::Error& e) {
    EXPECT_EQ(e.code(), aidx::ErrorCode::LiveInverterRequired);
  }
}

TEST_F(CalibrateCorpus, TooFewSamples) {
  oracle::TempDir dir("cal_few");
  corpora::PairCorpusSpec s;
  s.prefix = "r";
  s.count = 5;
  corpora::write_pair_corpus(dir / "i", dir / "m.jsonl", s);
  auto opts = options();
  opts.manifests = {dir / "m.jsonl", dir_->path() / "fake.jsonl"};
  try {
    aidx::cmd_calibrate(opts);
    FAIL();
  } catch (const aidx::Error& e) {
    EXPECT_EQ(e.code(), aidx::ErrorCode::InsufficientSamples);
  }
}

// --- attack -------------------------------------------------------------------------

TEST(CmdAttack, RequiresLiveInverter) {
  aidx::AttackOptions opts;
  opts.manifest = "unused.jsonl";
  try {
    aidx::cmd_attack(opts);
    FAIL();
  } catch (const aidx::Error& e) {
    EXPECT_EQ(e.code(), aidx::ErrorCode::LiveInverterRequired);
  }
}

TEST(CmdAttack, ZeroIterationsIsNoOp) {
  oracle::TempDir dir("attack0");
  corpora::PairCorpusSpec spec;
  spec.prefix = "a";
  spec.count = 6;
  spec.size = 16;
  spec.write_inverted = false;
  corpora::write_pair_corpus(dir / "img", dir / "m.jsonl", spec);
  spec.prefix = "b";
  spec.label = Label::Fake;
  corpora::write_pair_corpus(dir / "img", dir / "m.jsonl", spec);
  aidx::AttackOptions opts;
  opts.manifest = dir / "m.jsonl";
  opts.setup = reference_setup();
  opts.attack.iterations = 0;
  opts.tau = 0.035;
  const auto report = aidx::cmd_attack(opts);
  const auto& rows = report.details["rows"];
  ASSERT_EQ(rows.size(), 12u);
  for (const auto& r : rows) EXPECT_EQ(r["a_index_before"], r["a_index_after"]);
  const auto& s = report.details["attack_summary"];
  EXPECT_EQ(s["accuracy_before"], s["accuracy_after"]);
  for (const char* cls : {"real", "fake"}) {
    EXPECT_EQ(s[cls]["flipped"], 0);
    if (!s[cls]["success_rate"].is_null()) EXPECT_EQ(s[cls]["success_rate"], 0.0);
  }
  expect_self_consistent(aidx::report_to_json(report));
}

TEST(CmdAttack, FakesNearThresholdGivePartialSuccess) {
  oracle::TempDir dir("attack50");
  corpora::PairCorpusSpec spec;
  spec.prefix = "f";
  spec.count = 50;
  spec.size = 16;
  spec.label = Label::Fake;
  spec.write_inverted = false;
  corpora::write_pair_corpus(dir / "img", dir / "m.jsonl", spec);
  aidx::AttackOptions opts;
  opts.manifest = dir / "m.jsonl";
  opts.setup = reference_setup();
  opts.attack.iterations = 10;
  opts.tau = 1.0;
  const auto probe = aidx::cmd_attack(opts);
  std::vector<double> after;
  for (const auto& r : probe.details["rows"]) after.push_back(r["a_index_after"].get<double>());
  std::sort(after.begin(), after.end());
  opts.tau = after[after.size() / 2];

  const auto report = aidx::cmd_attack(opts);
  const auto& rows = report.details["rows"];
  ASSERT_EQ(rows.size(), 50u);
  const auto& fake = report.details["attack_summary"]["fake"];
  const double asr = fake["success_rate"].get<double>();
  EXPECT_GT(asr, 0.0);
  EXPECT_LT(asr, 1.0);
  std::size_t correct = 0, flipped = 0;
  for (const auto& r : rows) {
    EXPECT_GE(r["a_index_after"].get<double>(), r["a_index_before"].get<double>());
    EXPECT_LE(r["linf"].get<double>(), 8.0 / 255.0 + 1e-12);
    if (r["a_index_before"].get<double>() < opts.tau) {
      ++correct;
      if (r["a_index_after"].get<double>() >= opts.tau) ++flipped;
    }
  }
  EXPECT_EQ(fake["correct_before"], correct);
  EXPECT_EQ(fake["flipped"], flipped);
  EXPECT_EQ(asr, static_cast<double>(flipped) / static_cast<double>(correct));
}

// --- attacker-sim ---------------------------------------------------------------------

TEST(CmdAttackerSim, ReportsSelectionAndRefinement) {
  aidx::AttackerSimOptions opts;
  opts.prompt_tag = "a lighthouse at dusk";
  opts.n_candidates = 6;
  opts.height = opts.width = 16;
  opts.refine.iterations = 4;
  opts.setup = reference_setup();
  opts.tau_safety = 0.0365;
  const auto report = aidx::cmd_attacker_sim(opts);
  const auto& d = report.details;
  const auto scores = d["candidate_scores"].get<std::vector<double>>();
  ASSERT_EQ(scores.size(), 6u);
  EXPECT_EQ(d["selected_index"].get<std::size_t>(),
            static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin()));
  EXPECT_GE(d["refined_score"].get<double>(), d["selected_score"].get<double>());
  EXPECT_TRUE(d["selected_clears_security"].is_null());
  EXPECT_EQ(aidx::cmd_attacker_sim(opts).details.dump(), d.dump());

  aidx::AttackerSimOptions no_inv = opts;
  no_inv.setup.inverter.reset();
  EXPECT_THROW(aidx::cmd_attacker_sim(no_inv), aidx::Error);
}

// --- video ----------------------------------------------------------------------------

TEST(CmdVideo, IdentityFramesSeparableAucAndMissingFrame) {
  oracle::TempDir dir("video");
  std::ofstream m(dir / "v.jsonl");
  auto frame_list = [&](const std::string& id, int n, bool identity, std::uint64_t seed) {
    ordered_json frames = ordered_json::array(), inv = ordered_json::array();
    aidx::ReferenceInverterConfig cfg;
    cfg.fidelity = 0.2;
    cfg.blur_sigma = 2.0;
    for (int i = 0; i < n; ++i) {
      const std::string f = id + "_" + std::to_string(i) + ".png";
      const ImageBuffer x = aidx::make_natural_image(16, 16, 3, seed + static_cast<std::uint64_t>(i));
      aidx::save_image(x, dir / f);
      const std::string g = id + "_" + std::to_string(i) + "_inv.png";
      aidx::save_image(identity ? x : aidx::reference_invert(x, cfg), dir / g);
      frames.push_back(f);
      inv.push_back(g);
    }
    return std::pair{frames, inv};
  };
  {
    auto [f, i] = frame_list("same", 40, true, 10);
    m << ordered_json{{"id", "same"}, {"frames", f}, {"inverted_frames", i}, {"label", "real"}}.dump() << '\n';
  }
  {
    auto [f, i] = frame_list("hard", 12, false, 20);
    m << ordered_json{{"id", "hard"}, {"frames", f}, {"inverted_frames", i}, {"label", "fake"}}.dump() << '\n';
  }
  {
    auto [f, i] = frame_list("broken", 3, true, 30);
    std::filesystem::remove(dir / f[1].get<std::string>());
    m << ordered_json{{"id", "broken"}, {"frames", f}, {"inverted_frames", i}, {"label", "real"}}.dump() << '\n';
  }
  m.close();

  aidx::VideoOptions opts;
  opts.manifest = dir / "v.jsonl";
  opts.tau = 0.05;
  const auto report = aidx::cmd_video(opts);
  ASSERT_EQ(report.scores.size(), 2u);
  ASSERT_EQ(report.errors.size(), 1u);
  EXPECT_EQ(report.errors[0].record_id, "broken");
  const auto& same = report.scores[1];
  ASSERT_EQ(same.record_id, "same");
  EXPECT_NEAR(same.a_index, 0.038412597405586335, 1e-9);
  EXPECT_EQ(report.summary.auc, 1.0);

  const auto& rows = report.details["videos"];
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    const auto frames = r["frame_a_index"].get<std::vector<double>>();
    EXPECT_NEAR(r["video_a_index"].get<double>(),
                std::accumulate(frames.begin(), frames.end(), 0.0) / frames.size(), 1e-12);
  }
  EXPECT_EQ(rows[0]["frame_indices"].size(), 8u);
  expect_self_consistent(aidx::report_to_json(report));
}

// --- report ---------------------------------------------------------------------------

TEST(CmdReport, PublishedRegistryOnFixtureTable) {
  aidx::ReportOptions opts;
  opts.score_table = oracle::fixtures_dir() / "score_tables" / "internet_scores.csv";
  opts.registry = aidx::load_thresholds(oracle::fixtures_dir() / "published" / "thresholds.json");
  const auto report = aidx::cmd_report(opts);
  const auto expected = ordered_json::parse(
      oracle::read_file(oracle::fixtures_dir() / "score_tables" / "internet_scores_expected.json"));
  EXPECT_EQ(report.scores.size(), expected["records"].get<std::size_t>());
  for (const auto& [tag, count] : expected["authentic_at_tau_safety"].items()) {
    EXPECT_EQ(report.details["per_threshold"][tag]["tau_safety"]["real"]["authentic"], count) << tag;
  }
  expect_self_consistent(aidx::report_to_json(report));
}

TEST(CmdReport, LabeledFixtureSummary) {
  const auto expected = ordered_json::parse(
      oracle::read_file(oracle::fixtures_dir() / "score_tables" / "labeled_scores_expected.json"));
  aidx::ReportOptions opts;
  opts.score_table = oracle::fixtures_dir() / "score_tables" / "labeled_scores.csv";
  opts.tau = expected["tau"].get<double>();
  const auto report = aidx::cmd_report(opts);
  const auto& s = report.summary;
  EXPECT_EQ(s.real.authentic, expected["real_authentic"].get<std::size_t>());
  EXPECT_EQ(s.fake.authentic, expected["fake_authentic"].get<std::size_t>());
  EXPECT_NEAR(*s.accuracy, expected["accuracy"].get<double>(), 1e-12);
  EXPECT_NEAR(*s.precision, expected["precision"].get<double>(), 1e-12);
  EXPECT_NEAR(*s.recall, expected["recall"].get<double>(), 1e-12);
  EXPECT_NEAR(*s.f1, expected["f1"].get<double>(), 1e-12);
  EXPECT_NEAR(*s.auc, expected["auc"].get<double>(), 1e-12);
  expect_self_consistent(aidx::report_to_json(report));

  // Score-table rows rewritten by the toolkit read back unchanged.
  oracle::TempDir dir("report_rt");
  aidx::write_score_table(report.scores, std::nullopt, dir / "t.csv");
  const auto back = aidx::read_score_table(dir / "t.csv");
  ASSERT_EQ(back.size(), report.scores.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i].a_index, report.scores[i].a_index);
}
