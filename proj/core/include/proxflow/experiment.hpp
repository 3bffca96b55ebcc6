#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "proxflow/config.hpp"

namespace proxflow {

struct RunSummary {
  std::string status;
  std::optional<double> final_gap;  // f - f*, or distance to the zero set without a potential
  double max_invariant_violation = 0.0;
  double tolerance = 0.0;
  double wall_time_s = 0.0;
  long rows = 0;

  /// True for a successful terminal status with every checked invariant within tolerance.
  bool success() const;
};

struct ReportEnvelope {
  ExperimentConfig config;
  std::string config_echo;  // render(config)
  std::string provenance;
  std::string csv_path;
  std::string trace_path;   // lambda command only
  RunSummary summary;
};

/// "proxflow <version> (<git describe>)".
std::string provenance();

/// Runs the configured command and streams its CSV into `csv`. The lambda command
/// also writes its bracket trace into `trace` when given. wall_time_s is left at 0.
RunSummary run_to_stream(const ExperimentConfig& cfg, std::ostream& csv,
                         std::ostream* trace = nullptr);

/// Runs the command and writes the CSV to cfg.output_path, or to
/// proxflow-<command>.csv when the path is empty.
ReportEnvelope run_experiment(const ExperimentConfig& cfg);

/// Runs a grid of configs on up to `workers` threads. Output paths must be distinct.
/// The first failure is rethrown after every worker has finished.
std::vector<ReportEnvelope> run_experiments(const std::vector<ExperimentConfig>& grid,
                                            int workers);

/// Path of the bracket-trace CSV that accompanies `csv_path`.
std::string trace_path_for(const std::string& csv_path);

}  // namespace proxflow
