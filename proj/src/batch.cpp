#include "peduncle/batch.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <sstream>
#include <thread>

namespace peduncle {

namespace fs = std::filesystem;

namespace {

TrialOutcome fit_one(const CorpusEntry& entry, const BatchOptions& options) {
  TrialOutcome out;
  out.metrics.trial_id = entry.info.id;
  out.metrics.label = entry.info.label;
  if (!entry.trial) {
    out.error = entry.error.empty() ? "trial not loaded" : entry.error;
    return out;
  }
  const Trial& raw = *entry.trial;
  out.metrics.label = raw.label;
  out.ground_truth = raw.ground_truth;
  out.initial_fruit = apple_position_world(raw.samples.front(), raw.grasp_point);
  try {
    const Trial trial = options.bias_compensation ? bias_compensate(raw) : raw;
    const FitResult fit_result = fit(trial, options.solver);
    out.estimate = fit_result.attachment;
    out.metrics.final_mse = fit_result.final_mse;
    out.metrics.runtime = fit_result.runtime;
    out.metrics.converged = fit_result.converged;
    out.iterations = fit_result.iterations_total;
    out.restarts = fit_result.restarts_used;
    out.max_constraint_violation = fit_result.max_constraint_violation;
    out.kkt_residual = fit_result.kkt_residual;
    if (raw.ground_truth) {
      out.metrics.localization_error = localization_error(fit_result.attachment, *raw.ground_truth);
      try {
        out.metrics.orientation_error = orientation_error(fit_result.attachment, *raw.ground_truth, *out.initial_fruit);
      } catch (const DegenerateInputError&) {
        // estimate collapsed onto the fruit; leave the angle absent
      }
    }
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

std::optional<SummaryStats> maybe_summary(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return summarize(v);
}

GroupSummary summarize_group(const std::string& name, const std::vector<const TrialOutcome*>& members) {
  GroupSummary g;
  g.name = name;
  g.trials = members.size();
  std::vector<double> mse, loc, ori;
  for (const auto* t : members) {
    if (!t->fitted()) continue;
    ++g.fitted;
    if (t->metrics.converged) ++g.converged;
    mse.push_back(t->metrics.final_mse);
    if (t->metrics.localization_error) loc.push_back(*t->metrics.localization_error);
    if (t->metrics.orientation_error) ori.push_back(*t->metrics.orientation_error);
  }
  g.final_mse = maybe_summary(mse);
  g.localization_error = maybe_summary(loc);
  g.orientation_error = maybe_summary(ori);
  return g;
}

}  // namespace

Report run_batch(const Corpus& corpus, const BatchOptions& options) {
  options.solver.validate();
  Report report;
  report.solver = options.solver;
  report.bias_compensation = options.bias_compensation;
  report.seed = corpus.manifest.seed;
  report.config_digest = corpus.manifest.config_digest;
  report.sim_config = corpus.manifest.sim_config;

  const std::size_t n = corpus.entries.size();
  report.trials.resize(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) report.trials[i] = fit_one(corpus.entries[i], options);
  };
  const int jobs = std::clamp<int>(options.jobs, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
  {
    std::vector<std::jthread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
  }

  std::vector<const TrialOutcome*> all, success, failure;
  for (const auto& t : report.trials) {
    all.push_back(&t);
    (t.metrics.label == Label::Success ? success : failure).push_back(&t);
  }
  report.groups.push_back(summarize_group("all", all));
  report.groups.push_back(summarize_group("success", success));
  report.groups.push_back(summarize_group("failure", failure));

  std::vector<TrialMetrics> ms, mf;
  std::vector<double> runtimes, runtimes_converged;
  for (const auto& t : report.trials) {
    if (!t.fitted()) continue;
    (t.metrics.label == Label::Success ? ms : mf).push_back(t.metrics);
    runtimes.push_back(t.metrics.runtime);
    if (t.metrics.converged) runtimes_converged.push_back(t.metrics.runtime);
  }
  if (!ms.empty() && !mf.empty()) {
    try {
      report.comparison = class_comparison(ms, mf);
    } catch (const InsufficientSampleError& e) {
      report.comparison_note = e.what();
    }
  } else {
    report.comparison_note = "both classes must be present";
  }
  report.runtime_all = maybe_summary(runtimes);
  report.runtime_converged = maybe_summary(runtimes_converged);
  return report;
}

namespace {

Json vec_json(const std::optional<Vec3>& v) {
  if (!v) return nullptr;
  return Json::array({v->x(), v->y(), v->z()});
}

std::optional<Vec3> vec_opt(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

template <typename T>
Json opt_json(const std::optional<T>& v) {
  if (!v) return nullptr;
  return *v;
}

Json stats_json(const std::optional<SummaryStats>& s) {
  if (!s) return nullptr;
  return {{"n", s->count}, {"median", s->median}, {"iqr", s->iqr}, {"mean", s->mean},
          {"std", s->std}, {"min", s->min},       {"max", s->max}};
}

std::optional<SummaryStats> stats_from(const Json& j) {
  if (j.is_null()) return std::nullopt;
  SummaryStats s;
  s.count = j.at("n").get<std::size_t>();
  s.median = j.at("median").get<double>();
  s.iqr = j.at("iqr").get<double>();
  s.mean = j.at("mean").get<double>();
  s.std = j.at("std").get<double>();
  s.min = j.at("min").get<double>();
  s.max = j.at("max").get<double>();
  return s;
}

Json comparison_json(const MetricComparison& c) {
  return {{"success", stats_json(c.success)},
          {"failure", stats_json(c.failure)},
          {"welch", {{"t", c.welch.t}, {"dof", c.welch.dof}, {"p_value", c.welch.p_value}}}};
}

MetricComparison comparison_from(const Json& j) {
  MetricComparison c;
  c.success = *stats_from(j.at("success"));
  c.failure = *stats_from(j.at("failure"));
  c.welch.t = j.at("welch").at("t").get<double>();
  c.welch.dof = j.at("welch").at("dof").get<double>();
  c.welch.p_value = j.at("welch").at("p_value").get<double>();
  return c;
}

}  // namespace

Json report_to_json(const Report& report) {
  Json trials = Json::array();
  for (const auto& t : report.trials) {
    trials.push_back({
        {"id", t.metrics.trial_id},
        {"label", to_string(t.metrics.label)},
        {"status", t.fitted() ? "fitted" : "failed"},
        {"error", t.error},
        {"final_mse", t.fitted() ? Json(t.metrics.final_mse) : Json(nullptr)},
        {"localization_error", opt_json(t.metrics.localization_error)},
        {"orientation_error", opt_json(t.metrics.orientation_error)},
        {"converged", t.metrics.converged},
        {"iterations", t.iterations},
        {"restarts", t.restarts},
        {"max_constraint_violation", t.max_constraint_violation},
        {"kkt_residual", t.kkt_residual},
        {"estimate", vec_json(t.estimate)},
        {"ground_truth", vec_json(t.ground_truth)},
        {"initial_fruit", vec_json(t.initial_fruit)},
    });
  }
  Json groups = Json::array();
  for (const auto& g : report.groups) {
    groups.push_back({{"name", g.name},
                      {"trials", g.trials},
                      {"fitted", g.fitted},
                      {"converged", g.converged},
                      {"final_mse", stats_json(g.final_mse)},
                      {"localization_error", stats_json(g.localization_error)},
                      {"orientation_error", stats_json(g.orientation_error)}});
  }
  Json comparison = nullptr;
  if (report.comparison) {
    comparison = {{"localization_error", comparison_json(report.comparison->localization_error)},
                  {"final_mse", comparison_json(report.comparison->final_mse)},
                  {"test", "Welch two-sample t-test, two-sided"}};
  }
  return {
      {"schema_version", kReportSchemaVersion},
      {"seed", report.seed},
      {"config_digest", report.config_digest},
      {"sim_config", report.sim_config},
      {"solver_config", solver_config_to_json(report.solver)},
      {"bias_compensation", report.bias_compensation},
      {"trials", trials},
      {"summary", groups},
      {"class_comparison", comparison},
      {"class_comparison_note", report.comparison_note},
      {"notes",
       {{"quantiles", "IQR from linear-interpolation quartiles (p = 0.25, 0.75)"},
        {"std", "sample standard deviation (n - 1)"},
        {"units", "final_mse N^2, localization_error m, orientation_error degrees"},
        {"runtime", "wall-clock runtimes are in the .timing.json sidecar"}}},
  };
}

Json timing_to_json(const Report& report) {
  Json rows = Json::array();
  for (const auto& t : report.trials) {
    rows.push_back({{"id", t.metrics.trial_id},
                    {"runtime", t.fitted() ? Json(t.metrics.runtime) : Json(nullptr)},
                    {"converged", t.metrics.converged}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"trials", rows},
          {"runtime_all", stats_json(report.runtime_all)},
          {"runtime_converged", stats_json(report.runtime_converged)}};
}

Report report_from_json(const Json& body, const Json* timing) {
  Report r;
  try {
    if (body.at("schema_version").get<int>() != kReportSchemaVersion) {
      throw ValidationError("unsupported report schema_version");
    }
    r.seed = body.at("seed").get<std::uint64_t>();
    r.config_digest = body.at("config_digest").get<std::string>();
    r.sim_config = body.at("sim_config");
    r.solver = solver_config_from_json(body.at("solver_config"));
    r.bias_compensation = body.at("bias_compensation").get<bool>();
    for (const auto& t : body.at("trials")) {
      TrialOutcome o;
      o.metrics.trial_id = t.at("id").get<std::string>();
      o.metrics.label = label_from_string(t.at("label").get<std::string>());
      o.error = t.at("error").get<std::string>();
      if (!t.at("final_mse").is_null()) o.metrics.final_mse = t.at("final_mse").get<double>();
      if (!t.at("localization_error").is_null()) o.metrics.localization_error = t.at("localization_error").get<double>();
      if (!t.at("orientation_error").is_null()) o.metrics.orientation_error = t.at("orientation_error").get<double>();
      o.metrics.converged = t.at("converged").get<bool>();
      o.iterations = t.at("iterations").get<int>();
      o.restarts = t.at("restarts").get<int>();
      o.max_constraint_violation = t.at("max_constraint_violation").get<double>();
      o.kkt_residual = t.at("kkt_residual").get<double>();
      o.estimate = vec_opt(t.at("estimate"));
      o.ground_truth = vec_opt(t.at("ground_truth"));
      o.initial_fruit = vec_opt(t.at("initial_fruit"));
      r.trials.push_back(std::move(o));
    }
    for (const auto& g : body.at("summary")) {
      GroupSummary s;
      s.name = g.at("name").get<std::string>();
      s.trials = g.at("trials").get<std::size_t>();
      s.fitted = g.at("fitted").get<std::size_t>();
      s.converged = g.at("converged").get<std::size_t>();
      s.final_mse = stats_from(g.at("final_mse"));
      s.localization_error = stats_from(g.at("localization_error"));
      s.orientation_error = stats_from(g.at("orientation_error"));
      r.groups.push_back(std::move(s));
    }
    if (!body.at("class_comparison").is_null()) {
      const Json& c = body.at("class_comparison");
      r.comparison = ClassComparison{comparison_from(c.at("localization_error")), comparison_from(c.at("final_mse"))};
    }
    r.comparison_note = body.at("class_comparison_note").get<std::string>();
    if (timing) {
      const Json& rows = timing->at("trials");
      if (rows.size() != r.trials.size()) throw ValidationError("timing sidecar does not match the report");
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].at("id").get<std::string>() != r.trials[i].metrics.trial_id) {
          throw ValidationError("timing sidecar trial order does not match the report");
        }
        if (!rows[i].at("runtime").is_null()) r.trials[i].metrics.runtime = rows[i].at("runtime").get<double>();
      }
      r.runtime_all = stats_from(timing->at("runtime_all"));
      r.runtime_converged = stats_from(timing->at("runtime_converged"));
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
  return r;
}

fs::path timing_path_for(const fs::path& report_path) {
  fs::path p = report_path;
  p.replace_extension(".timing.json");
  return p;
}

void write_report(const Report& report, const fs::path& path) {
  write_file_atomic(path, report_to_json(report).dump(2) + "\n");
  write_file_atomic(timing_path_for(path), timing_to_json(report).dump(2) + "\n");
}

Report read_report(const fs::path& path) {
  const Json body = read_json(path);
  const fs::path tpath = timing_path_for(path);
  if (fs::exists(tpath)) {
    const Json timing = read_json(tpath);
    return report_from_json(body, &timing);
  }
  return report_from_json(body);
}

PlotKind plot_kind_from_string(const std::string& s) {
  if (s == "error_vs_mse") return PlotKind::ErrorVsMse;
  if (s == "runtime_hist") return PlotKind::RuntimeHist;
  if (s == "joint_locations") return PlotKind::JointLocations;
  throw ValidationError("unknown plot data kind '" + s + "'");
}

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "nan"; }

}  // namespace

std::string emit_plot_data(const Report& report, PlotKind kind) {
  std::ostringstream out;
  switch (kind) {
    case PlotKind::ErrorVsMse:
      out << "trial_id\tfinal_mse\tlocalization_error\torientation_error\tlabel\n";
      for (const auto& t : report.trials) {
        if (!t.fitted()) continue;
        out << t.metrics.trial_id << '\t' << fmt(t.metrics.final_mse) << '\t' << fmt(t.metrics.localization_error)
            << '\t' << fmt(t.metrics.orientation_error) << '\t' << to_string(t.metrics.label) << '\n';
      }
      break;
    case PlotKind::RuntimeHist:
      if (!report.runtime_all && !report.trials.empty()) {
        throw IoError("runtime data unavailable: timing sidecar missing");
      }
      out << "trial_id\truntime\tconverged\n";
      for (const auto& t : report.trials) {
        if (!t.fitted()) continue;
        out << t.metrics.trial_id << '\t' << fmt(t.metrics.runtime) << '\t' << (t.metrics.converged ? 1 : 0) << '\n';
      }
      break;
    case PlotKind::JointLocations:
      out << "trial_id\ttrue_x\ttrue_y\ttrue_z\test_x\test_y\test_z\tlabel\n";
      for (const auto& t : report.trials) {
        if (!t.fitted()) continue;
        auto coord = [](const std::optional<Vec3>& v, int i) { return v ? fmt((*v)(i)) : std::string("nan"); };
        out << t.metrics.trial_id;
        for (int i = 0; i < 3; ++i) out << '\t' << coord(t.ground_truth, i);
        for (int i = 0; i < 3; ++i) out << '\t' << coord(t.estimate, i);
        out << '\t' << to_string(t.metrics.label) << '\n';
      }
      break;
  }
  return out.str();
}

}  // namespace peduncle
