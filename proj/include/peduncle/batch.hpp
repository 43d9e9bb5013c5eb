#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "peduncle/evaluation.hpp"
#include "peduncle/trial_io.hpp"

namespace peduncle {

inline constexpr int kReportSchemaVersion = 1;

/// Per-trial row of a batch report.
struct TrialOutcome {
  TrialMetrics metrics;
  std::string error;  // non-empty when the trial could not be loaded or fitted
  std::optional<Vec3> estimate;
  std::optional<Vec3> ground_truth;
  std::optional<Vec3> initial_fruit;
  int iterations = 0;
  int restarts = 0;
  double max_constraint_violation = 0.0;
  double kkt_residual = 0.0;

  bool fitted() const { return error.empty(); }
};

struct GroupSummary {
  std::string name;  // "all", "success", "failure"
  std::size_t trials = 0;
  std::size_t fitted = 0;
  std::size_t converged = 0;
  std::optional<SummaryStats> final_mse;
  std::optional<SummaryStats> localization_error;
  std::optional<SummaryStats> orientation_error;
};

struct Report {
  SolverConfig solver;
  bool bias_compensation = true;
  std::uint64_t seed = 0;
  std::string config_digest;
  Json sim_config;
  std::vector<TrialOutcome> trials;  // manifest order
  std::vector<GroupSummary> groups;
  std::optional<ClassComparison> comparison;
  std::string comparison_note;  // why the comparison is absent, if it is
  // Wall-clock statistics; kept out of the deterministic report body.
  std::optional<SummaryStats> runtime_all;
  std::optional<SummaryStats> runtime_converged;
};

struct BatchOptions {
  SolverConfig solver;
  int jobs = 1;
  bool bias_compensation = true;
};

/// Fits every corpus member; per-trial failures are recorded, never thrown.
/// Output is independent of the number of jobs.
Report run_batch(const Corpus& corpus, const BatchOptions& options);

/// Deterministic report body (no wall-clock values).
Json report_to_json(const Report& report);
/// Per-trial runtimes and their summaries.
Json timing_to_json(const Report& report);
Report report_from_json(const Json& body, const Json* timing = nullptr);

std::filesystem::path timing_path_for(const std::filesystem::path& report_path);

/// Writes the report and its timing sidecar (<report>.timing.json).
void write_report(const Report& report, const std::filesystem::path& path);
/// Reads the report and, when present, its timing sidecar.
Report read_report(const std::filesystem::path& path);

enum class PlotKind { ErrorVsMse, RuntimeHist, JointLocations };
PlotKind plot_kind_from_string(const std::string& s);

/// Tab-separated table: one header row, one row per trial.
std::string emit_plot_data(const Report& report, PlotKind kind);

}  // namespace peduncle
