// Command-line front end: simulate corpora, fit single trials, run batches and
// export plot-ready tables.
//
// Exit codes: 0 success, 1 validation/parse error, 2 solver non-convergence
// (fit only), 3 I/O error.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "peduncle/batch.hpp"
#include "peduncle/simulator.hpp"
#include "peduncle/solver.hpp"
#include "peduncle/trial_io.hpp"

namespace fs = std::filesystem;
using namespace peduncle;

namespace {

enum ExitCode { kOk = 0, kInvalid = 1, kNotConverged = 2, kIo = 3 };

Json vec(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

int run_simulate(const std::string& config_path, int n, double failure_fraction, std::uint64_t seed,
                 const std::string& out_dir) {
  SimConfig config = load_sim_config(config_path);
  config.seed = seed;
  const auto records = generate_corpus(config, n, failure_fraction);
  std::vector<Trial> trials;
  trials.reserve(records.size());
  for (const auto& r : records) trials.push_back(r.trial);

  Manifest manifest;
  manifest.seed = seed;
  manifest.sim_config = sim_config_to_json(config);
  manifest.sim_config["n_trials"] = n;
  manifest.sim_config["failure_fraction"] = failure_fraction;
  manifest.config_digest = config_digest(manifest.sim_config);
  save_corpus(trials, manifest, out_dir);
  std::cerr << "wrote " << trials.size() << " trials to " << out_dir << "\n";
  return kOk;
}

int run_fit(const std::string& trial_path, bool no_bias, const std::string& solver_path, bool trace) {
  std::vector<std::string> warnings;
  const Trial raw = load_trial(trial_path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  SolverConfig config = solver_path.empty() ? SolverConfig{} : load_solver_config(solver_path);
  config.record_trace = trace;

  const Trial trial = no_bias ? raw : bias_compensate(raw);
  const FitResult r = fit(trial, config);

  Json out = {
      {"id", raw.id},
      {"estimate", vec(r.attachment)},
      {"final_mse", r.final_mse},
      {"iterations_total", r.iterations_total},
      {"restarts_used", r.restarts_used},
      {"runtime", r.runtime},
      {"converged", r.converged},
      {"max_constraint_violation", r.max_constraint_violation},
      {"kkt_residual", r.kkt_residual},
      {"bias_compensation", !no_bias},
  };
  if (!r.failure_reason.empty()) out["failure_reason"] = r.failure_reason;
  if (raw.ground_truth) {
    const Vec3 fruit0 = apple_position_world(raw.samples.front(), raw.grasp_point);
    out["localization_error"] = (r.attachment - *raw.ground_truth).norm();
    out["orientation_error"] = angle_between<double>(*raw.ground_truth - fruit0, r.attachment - fruit0);
  }
  if (trace) {
    Json rows = Json::array();
    for (const auto& e : r.trace) rows.push_back({{"iteration", e.iteration}, {"estimate", vec(e.attachment)}, {"cost", e.cost}});
    out["trace"] = rows;
  }
  std::cout << out.dump(2) << "\n";
  return r.converged ? kOk : kNotConverged;
}

int run_batch_cmd(const std::string& corpus_dir, const std::string& solver_path, int jobs, bool no_bias,
                  const std::string& report_path) {
  const Corpus corpus = load_corpus(corpus_dir);
  for (const auto& e : corpus.entries) {
    for (const auto& w : e.warnings) std::cerr << "warning: " << w << "\n";
    if (!e.error.empty()) std::cerr << "error: " << e.error << "\n";
  }
  BatchOptions options;
  options.solver = solver_path.empty() ? SolverConfig{} : load_solver_config(solver_path);
  options.jobs = jobs;
  options.bias_compensation = !no_bias;
  const Report report = run_batch(corpus, options);
  write_report(report, report_path);

  const auto& all = report.groups.front();
  std::cerr << "fitted " << all.fitted << "/" << all.trials << " trials, " << all.converged << " converged\n";
  if (all.localization_error) std::cerr << "median localization error " << all.localization_error->median << " m\n";
  return kOk;
}

int run_report(const std::string& in, const std::string& kind, const std::string& out) {
  const PlotKind plot = plot_kind_from_string(kind);
  const Report report = read_report(in);
  write_file_atomic(out, emit_plot_data(report, plot));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Peduncle attachment-point localization from wrist force/torque data"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic trial corpus");
  std::string sim_config, sim_out;
  int sim_n = 70;
  double failure_fraction = 0.0;
  std::uint64_t seed = 0;
  simulate->add_option("--config", sim_config, "Simulation config (JSON)")->required();
  simulate->add_option("--n", sim_n, "Number of trials")->required()->check(CLI::NonNegativeNumber);
  simulate->add_option("--failure-fraction", failure_fraction, "Share of compliant-grasp Failure trials")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--seed", seed, "Corpus seed")->required();
  simulate->add_option("--out", sim_out, "Output corpus directory")->required();

  auto* fit_cmd = app.add_subcommand("fit", "Fit one trial file");
  std::string trial_path, solver_path;
  bool no_bias = false, trace = false;
  fit_cmd->add_option("--trial", trial_path, "Trial file (JSON)")->required();
  fit_cmd->add_flag("--no-bias-compensation", no_bias, "Use raw wrenches without subtracting the first sample");
  fit_cmd->add_option("--solver-config", solver_path, "Solver config (JSON)");
  fit_cmd->add_flag("--trace", trace, "Include the iterate trace in the output");

  auto* batch = app.add_subcommand("batch", "Fit every trial of a corpus and write a report");
  std::string corpus_dir, report_path, batch_solver;
  int jobs = 1;
  bool batch_no_bias = false;
  batch->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  batch->add_option("--solver-config", batch_solver, "Solver config (JSON)");
  batch->add_option("--jobs", jobs, "Parallel workers")->check(CLI::PositiveNumber);
  batch->add_flag("--no-bias-compensation", batch_no_bias, "Use raw wrenches without subtracting the first sample");
  batch->add_option("--report", report_path, "Report output file")->required();

  auto* report = app.add_subcommand("report", "Export plot-ready tables from a report");
  std::string report_in, plot_kind, report_out;
  report->add_option("--in", report_in, "Report file")->required();
  report->add_option("--plot-data", plot_kind, "error_vs_mse | runtime_hist | joint_locations")->required();
  report->add_option("--out", report_out, "Output table")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*simulate) return run_simulate(sim_config, sim_n, failure_fraction, seed, sim_out);
    if (*fit_cmd) return run_fit(trial_path, no_bias, solver_path, trace);
    if (*batch) return run_batch_cmd(corpus_dir, batch_solver, jobs, batch_no_bias, report_path);
    if (*report) return run_report(report_in, plot_kind, report_out);
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kInvalid;
}
