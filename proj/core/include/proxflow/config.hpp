#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "proxflow/operators.hpp"

namespace proxflow {

enum class Command { Flow, PP, Newton, Lambda };

std::string_view to_string(Command c) noexcept;
std::optional<Command> parse_command(std::string_view name) noexcept;

/// kind is one of isotropic, rotation, quadratic, logistic1d.
struct OperatorSpec {
  std::string kind = "isotropic";
  double alpha = 1.0;  // isotropic
  Matrix q;            // quadratic
  Vector b;            // quadratic; empty means zero

  bool operator==(const OperatorSpec& o) const;
};

/// Builds the operator for `spec` in dimension `dim` (taken from x0).
MonotoneOperator build_operator(const OperatorSpec& spec, int dim);

struct ExperimentConfig {
  Command command = Command::Flow;
  OperatorSpec op;
  Vector x0;
  double theta = 1.0;
  double sigma = 0.1;
  double sigma_l = 0.1;
  double sigma_u = 0.9;
  std::optional<double> L;
  bool estimate_L = false;  // L = "estimate"
  double t_end = 10.0;
  double h = 0.01;
  int sample_stride = 1;
  int max_iter = 1000;
  double grad_tol = 1e-10;
  double rel_tol = 1e-10;
  std::string output_path;
  std::uint64_t seed = 0;

  bool operator==(const ExperimentConfig& o) const;
};

/// Parses the YAML config dialect described in the README. Unknown keys are
/// rejected. Raises ParseError (with line and key) or ValidationError.
ExperimentConfig parse_config(std::string_view text);

/// Throws ValidationError naming the first violated invariant.
void validate(const ExperimentConfig& cfg);

/// Inverse of parse_config: parse_config(render(c)) == c.
std::string render(const ExperimentConfig& cfg);

}  // namespace proxflow
