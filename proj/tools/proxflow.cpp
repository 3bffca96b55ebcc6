#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "proxflow/config.hpp"
#include "proxflow/errors.hpp"
#include "proxflow/experiment.hpp"

namespace {

constexpr int kExitSolverFailure = 1;
constexpr int kExitConfigError = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("proxflow");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("PROXFLOW_LOG");
  const std::string level = env ? env : "info";
  if (level == "quiet") {
    spdlog::set_level(spdlog::level::off);
  } else if (level == "trace") {
    spdlog::set_level(spdlog::level::trace);
  } else {
    if (level != "info") spdlog::warn("PROXFLOW_LOG='{}' not recognised, using info", level);
    spdlog::set_level(spdlog::level::info);
  }
}

int fail(const std::string& command, const std::string& status, const std::string& message,
         int code) {
  spdlog::error("{}", message);
  nlohmann::json j{{"command", command}, {"status", status}, {"error", message},
                   {"provenance", proxflow::provenance()}};
  std::cout << j.dump() << std::endl;
  return code;
}

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Large-step proximal point methods and their continuous closed-loop flow"};
  std::string command;
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  app.add_option("command", command, "flow | pp | newton | lambda")
      ->required()
      ->check(CLI::IsMember({"flow", "pp", "newton", "lambda"}));
  app.add_option("--config", config_path, "Experiment config file")->required();
  auto* out_opt = app.add_option("--out", out_path, "CSV output path");
  auto* seed_opt = app.add_option("--seed", seed, "Seed for randomized steps");
  app.set_version_flag("--version", proxflow::provenance());
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfigError;
  }
  setup_logging();

  std::ifstream in(config_path);
  if (!in) return fail(command, "ConfigError", "cannot read config '" + config_path + "'",
                       kExitConfigError);
  std::stringstream text;
  text << in.rdbuf();

  proxflow::ExperimentConfig cfg;
  try {
    cfg = proxflow::parse_config(text.str());
    const auto cmd = *proxflow::parse_command(command);
    if (cmd != cfg.command && text.str().find("command") != std::string::npos) {
      spdlog::warn("config says '{}', running '{}'", proxflow::to_string(cfg.command), command);
    }
    cfg.command = cmd;
    if (*out_opt) cfg.output_path = out_path;
    if (*seed_opt) cfg.seed = seed;
    proxflow::validate(cfg);
  } catch (const proxflow::Error& e) {
    return fail(command, "ConfigError", e.what(), kExitConfigError);
  }
  spdlog::trace("config:\n{}", proxflow::render(cfg));

  proxflow::ReportEnvelope env;
  try {
    spdlog::info("running {} on {} (dim {})", command, cfg.op.kind, cfg.x0.size());
    env = proxflow::run_experiment(cfg);
  } catch (const proxflow::Error& e) {
    const bool config = e.kind() == proxflow::ErrorKind::ValidationError ||
                        e.kind() == proxflow::ErrorKind::ParseError;
    return fail(command, config ? "ConfigError" : "SolverError", e.what(),
                config ? kExitConfigError : kExitSolverFailure);
  } catch (const std::exception& e) {
    return fail(command, "SolverError", e.what(), kExitSolverFailure);
  }

  const auto& s = env.summary;
  spdlog::info("{}: {} rows, status {}, max violation {:.3g} (tol {:.3g}), {:.3f} s",
               env.csv_path, s.rows, s.status, s.max_invariant_violation, s.tolerance,
               s.wall_time_s);
  nlohmann::json j{{"command", command},
                   {"status", s.status},
                   {"success", s.success()},
                   {"final_gap", optional_number(s.final_gap)},
                   {"max_invariant_violation", s.max_invariant_violation},
                   {"tolerance", s.tolerance},
                   {"wall_time_s", s.wall_time_s},
                   {"rows", s.rows},
                   {"csv", env.csv_path},
                   {"provenance", env.provenance},
                   {"config", env.config_echo}};
  if (!env.trace_path.empty()) j["trace_csv"] = env.trace_path;
  std::cout << j.dump() << std::endl;
  return s.success() ? 0 : kExitSolverFailure;
}
