#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "peduncle/batch.hpp"
#include "test_support.hpp"

using namespace peduncle;
using peduncle::testing::TempDir;

namespace {

Corpus make_corpus(const SimConfig& config, int n, double failure_fraction) {
  Corpus corpus;
  corpus.manifest.seed = config.seed;
  corpus.manifest.sim_config = sim_config_to_json(config);
  corpus.manifest.config_digest = config_digest(corpus.manifest.sim_config);
  for (auto& rec : generate_corpus(config, n, failure_fraction)) {
    CorpusEntry e;
    e.info = {rec.trial.id, rec.trial.label, rec.trial.id + ".json"};
    e.trial = std::move(rec.trial);
    corpus.entries.push_back(std::move(e));
  }
  return corpus;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::size_t columns(const std::string& line) { return static_cast<std::size_t>(std::count(line.begin(), line.end(), '\t')) + 1; }

const GroupSummary& group(const Report& r, const std::string& name) {
  for (const auto& g : r.groups)
    if (g.name == name) return g;
  throw std::runtime_error("no group " + name);
}

}  // namespace

TEST(RunBatch, NoiselessCorpusAllConverge) {
  SimConfig c;
  c.noise_sigma = 0.0;
  const Report r = run_batch(make_corpus(c, 70, 0.0), {});
  const GroupSummary& all = group(r, "all");
  EXPECT_EQ(all.trials, 70u);
  EXPECT_EQ(all.fitted, 70u);
  EXPECT_EQ(all.converged, 70u);
  ASSERT_TRUE(all.localization_error);
  EXPECT_LT(all.localization_error->median, 1e-4);
  EXPECT_FALSE(r.comparison);
  EXPECT_FALSE(r.comparison_note.empty());
}

TEST(RunBatch, MixedCorpusComparesClasses) {
  const Report r = run_batch(make_corpus(SimConfig{}, 105, 1.0 / 3.0), {});
  EXPECT_EQ(group(r, "success").trials, 70u);
  EXPECT_EQ(group(r, "failure").trials, 35u);
  ASSERT_TRUE(r.comparison);
  EXPECT_EQ(r.comparison->localization_error.success.count, 70u);
  EXPECT_EQ(r.comparison->localization_error.failure.count, 35u);
  EXPECT_GT(r.comparison->localization_error.failure.median, r.comparison->localization_error.success.median);
  ASSERT_TRUE(r.runtime_all);
  EXPECT_EQ(r.runtime_all->count, 105u);
}

TEST(RunBatch, ReportIndependentOfJobs) {
  TempDir dir("batch_jobs");
  const Corpus corpus = make_corpus(SimConfig{}, 24, 0.25);
  BatchOptions one, eight;
  eight.jobs = 8;
  write_report(run_batch(corpus, one), dir / "r1.json");
  write_report(run_batch(corpus, eight), dir / "r8.json");
  EXPECT_EQ(read_file(dir / "r1.json"), read_file(dir / "r8.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "r1.timing.json"));
}

TEST(RunBatch, CorruptedMemberMarkedFailed) {
  TempDir dir("batch_corrupt");
  std::vector<Trial> trials;
  for (const auto& r : generate_corpus(SimConfig{}, 10, 0.0)) trials.push_back(r.trial);
  save_corpus(trials, Manifest{}, dir.path());
  std::ofstream(dir / "trial_004.json") << "{ truncated";

  const Report r = run_batch(load_corpus(dir.path()), {});
  ASSERT_EQ(r.trials.size(), 10u);
  EXPECT_FALSE(r.trials[4].fitted());
  EXPECT_FALSE(r.trials[4].metrics.converged);
  EXPECT_EQ(group(r, "all").fitted, 9u);
  EXPECT_EQ(group(r, "all").trials, 10u);
  const Json body = report_to_json(r);
  EXPECT_FALSE(body["trials"][4]["error"].get<std::string>().empty());
}

TEST(RunBatch, BiasCompensationOptional) {
  const Corpus corpus = make_corpus(SimConfig{}, 3, 0.0);
  BatchOptions raw;
  raw.bias_compensation = false;
  const Report r = run_batch(corpus, raw);
  EXPECT_FALSE(r.bias_compensation);
  EXPECT_FALSE(report_to_json(r)["bias_compensation"].get<bool>());
}

TEST(Report, JsonRoundTrip) {
  TempDir dir("report_rt");
  const Report r = run_batch(make_corpus(SimConfig{}, 12, 0.5), {});
  write_report(r, dir / "report.json");
  const Report back = read_report(dir / "report.json");
  EXPECT_EQ(report_to_json(back).dump(), report_to_json(r).dump());
  EXPECT_EQ(timing_to_json(back).dump(), timing_to_json(r).dump());
}

TEST(PlotData, Shapes) {
  const Report r = run_batch(make_corpus(SimConfig{}, 70, 0.0), {});

  const auto evm = lines(emit_plot_data(r, PlotKind::ErrorVsMse));
  ASSERT_EQ(evm.size(), 71u);
  EXPECT_EQ(evm[0], "trial_id\tfinal_mse\tlocalization_error\torientation_error\tlabel");
  for (const auto& row : evm) EXPECT_EQ(columns(row), 5u);

  const auto rt = lines(emit_plot_data(r, PlotKind::RuntimeHist));
  ASSERT_EQ(rt.size(), 71u);
  EXPECT_EQ(rt[0], "trial_id\truntime\tconverged");

  const auto jl = lines(emit_plot_data(r, PlotKind::JointLocations));
  ASSERT_EQ(jl.size(), 71u);
  for (const auto& row : jl) EXPECT_EQ(columns(row), 8u);

  EXPECT_EQ(plot_kind_from_string("runtime_hist"), PlotKind::RuntimeHist);
  EXPECT_THROW(plot_kind_from_string("histogram"), ValidationError);
}

TEST(PlotData, RuntimeNeedsTimingSidecar) {
  TempDir dir("plot_sidecar");
  const Report r = run_batch(make_corpus(SimConfig{}, 4, 0.0), {});
  write_report(r, dir / "report.json");
  std::filesystem::remove(timing_path_for(dir / "report.json"));
  const Report body_only = read_report(dir / "report.json");
  EXPECT_THROW(emit_plot_data(body_only, PlotKind::RuntimeHist), IoError);
  EXPECT_NO_THROW(emit_plot_data(body_only, PlotKind::ErrorVsMse));
}
