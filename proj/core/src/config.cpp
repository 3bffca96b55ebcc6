#include "proxflow/config.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "proxflow/errors.hpp"

namespace proxflow {

std::string_view to_string(Command c) noexcept {
  switch (c) {
    case Command::Flow: return "flow";
    case Command::PP: return "pp";
    case Command::Newton: return "newton";
    case Command::Lambda: return "lambda";
  }
  return "unknown";
}

std::optional<Command> parse_command(std::string_view name) noexcept {
  for (Command c : {Command::Flow, Command::PP, Command::Newton, Command::Lambda}) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

namespace {

bool same(const Vector& a, const Vector& b) { return a.size() == b.size() && a == b; }
bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

[[noreturn]] void parse_fail(const YAML::Node& node, std::string_view key, std::string_view what) {
  throw Error(ErrorKind::ParseError,
              fmt::format("line {}, key '{}': {}", node.Mark().line + 1, key, what));
}

[[noreturn]] void invalid(std::string_view what) {
  throw Error(ErrorKind::ValidationError, std::string(what));
}

template <class T>
T scalar(const YAML::Node& node, std::string_view key, std::string_view expected) {
  if (!node.IsScalar()) parse_fail(node, key, fmt::format("expected {}", expected));
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    parse_fail(node, key, fmt::format("expected {}, got '{}'", expected, node.Scalar()));
  }
}

double number(const YAML::Node& node, std::string_view key) {
  return scalar<double>(node, key, "a number");
}

Vector vector_of(const YAML::Node& node, std::string_view key) {
  if (!node.IsSequence()) parse_fail(node, key, "expected a list of numbers");
  Vector v(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = number(node[i], key);
  }
  return v;
}

Matrix matrix_of(const YAML::Node& node, std::string_view key) {
  if (!node.IsSequence() || node.size() == 0) parse_fail(node, key, "expected a list of rows");
  const std::size_t rows = node.size();
  std::size_t cols = 0;
  Matrix m;
  for (std::size_t i = 0; i < rows; ++i) {
    const Vector row = vector_of(node[i], key);
    if (i == 0) {
      cols = static_cast<std::size_t>(row.size());
      m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    } else if (static_cast<std::size_t>(row.size()) != cols) {
      parse_fail(node[i], key, "rows have different lengths");
    }
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

OperatorSpec parse_op(const YAML::Node& node) {
  OperatorSpec spec;
  if (node.IsScalar()) {
    spec.kind = node.Scalar();
    return spec;
  }
  if (!node.IsMap()) parse_fail(node, "op", "expected a kind name or a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    const YAML::Node& val = kv.second;
    if (key == "kind") {
      spec.kind = scalar<std::string>(val, "op.kind", "a string");
    } else if (key == "alpha") {
      spec.alpha = number(val, "op.alpha");
    } else if (key == "Q") {
      spec.q = matrix_of(val, "op.Q");
    } else if (key == "b") {
      spec.b = vector_of(val, "op.b");
    } else {
      parse_fail(kv.first, "op." + key, "unknown key");
    }
  }
  return spec;
}

}  // namespace

bool OperatorSpec::operator==(const OperatorSpec& o) const {
  return kind == o.kind && alpha == o.alpha && same(q, o.q) && same(b, o.b);
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return command == o.command && op == o.op && same(x0, o.x0) && theta == o.theta &&
         sigma == o.sigma && sigma_l == o.sigma_l && sigma_u == o.sigma_u && L == o.L &&
         estimate_L == o.estimate_L && t_end == o.t_end && h == o.h &&
         sample_stride == o.sample_stride && max_iter == o.max_iter && grad_tol == o.grad_tol &&
         rel_tol == o.rel_tol && output_path == o.output_path && seed == o.seed;
}

MonotoneOperator build_operator(const OperatorSpec& spec, int dim) {
  if (spec.kind == "isotropic") return make_isotropic(spec.alpha, dim);
  if (spec.kind == "rotation") {
    if (dim != 2) invalid("op rotation needs a 2-dimensional x0");
    return make_rotation(dim);
  }
  if (spec.kind == "logistic1d") {
    if (dim != 1) invalid("op logistic1d needs a 1-dimensional x0");
    return make_logistic1d();
  }
  if (spec.kind == "quadratic") {
    if (spec.q.rows() != dim || spec.q.cols() != dim) {
      invalid(fmt::format("op.Q must be {0}x{0} to match x0", dim));
    }
    const Vector b = spec.b.size() == 0 ? Vector(Vector::Zero(dim)) : spec.b;
    if (b.size() != dim) invalid(fmt::format("op.b must have length {}", dim));
    return make_quadratic(spec.q, b);
  }
  invalid(fmt::format("op kind '{}' is not one of isotropic, rotation, quadratic, logistic1d",
                      spec.kind));
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.x0.size() == 0) invalid("x0 is required");
  for (Eigen::Index i = 0; i < cfg.x0.size(); ++i) {
    if (!std::isfinite(cfg.x0[i])) invalid("x0 must be finite");
  }
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) invalid(fmt::format("{} > 0", what));
  };
  positive(cfg.theta, "theta");
  positive(cfg.h, "h");
  positive(cfg.t_end, "t_end");
  positive(cfg.grad_tol, "grad_tol");
  positive(cfg.rel_tol, "rel_tol");
  if (!(cfg.sigma >= 0.0 && cfg.sigma < 1.0)) invalid("sigma in [0, 1)");
  if (!(cfg.sigma_u < 1.0)) invalid("sigma_u < 1");
  if (!(cfg.sigma_l > 0.0)) invalid("sigma_l > 0");
  if (!(cfg.sigma_l < cfg.sigma_u)) invalid("sigma_l < sigma_u");
  if (cfg.max_iter < 1) invalid("max_iter >= 1");
  if (cfg.sample_stride < 1) invalid("sample_stride >= 1");
  if (cfg.L && cfg.estimate_L) invalid("L is either a number or \"estimate\"");
  if (cfg.L) positive(*cfg.L, "L");
  if (cfg.op.kind == "isotropic") positive(cfg.op.alpha, "op.alpha");

  if (cfg.command == Command::Newton) {
    if (!cfg.L && !cfg.estimate_L) invalid("L required for newton");
    if (cfg.op.kind == "rotation") invalid("newton needs a potential; rotation has none");
  }
  // Shape and PSD checks live in the operator factories.
  (void)build_operator(cfg.op, static_cast<int>(cfg.x0.size()));
}

ExperimentConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorKind::ParseError, fmt::format("line {}: {}", e.mark.line + 1, e.msg));
  }
  if (!root.IsMap()) throw Error(ErrorKind::ParseError, "line 1: expected key: value pairs");

  ExperimentConfig cfg;
  std::set<std::string> seen;
  for (const auto& kv : root) {
    const auto key = scalar<std::string>(kv.first, "?", "a key");
    const YAML::Node& val = kv.second;
    if (!seen.insert(key).second) parse_fail(kv.first, key, "duplicate key");
    if (key == "command") {
      const auto name = scalar<std::string>(val, key, "a command name");
      const auto c = parse_command(name);
      if (!c) parse_fail(val, key, "expected one of flow, pp, newton, lambda");
      cfg.command = *c;
    } else if (key == "op") {
      cfg.op = parse_op(val);
    } else if (key == "x0") {
      cfg.x0 = vector_of(val, key);
    } else if (key == "theta") {
      cfg.theta = number(val, key);
    } else if (key == "sigma") {
      cfg.sigma = number(val, key);
    } else if (key == "sigma_l") {
      cfg.sigma_l = number(val, key);
    } else if (key == "sigma_u") {
      cfg.sigma_u = number(val, key);
    } else if (key == "L") {
      if (val.IsScalar() && val.Scalar() == "estimate") {
        cfg.estimate_L = true;
      } else {
        cfg.L = number(val, key);
      }
    } else if (key == "t_end") {
      cfg.t_end = number(val, key);
    } else if (key == "h") {
      cfg.h = number(val, key);
    } else if (key == "sample_stride") {
      cfg.sample_stride = scalar<int>(val, key, "an integer");
    } else if (key == "max_iter") {
      cfg.max_iter = scalar<int>(val, key, "an integer");
    } else if (key == "grad_tol") {
      cfg.grad_tol = number(val, key);
    } else if (key == "rel_tol") {
      cfg.rel_tol = number(val, key);
    } else if (key == "output_path") {
      cfg.output_path = scalar<std::string>(val, key, "a path");
    } else if (key == "seed") {
      cfg.seed = scalar<std::uint64_t>(val, key, "a non-negative integer");
    } else {
      parse_fail(kv.first, key, "unknown key");
    }
  }
  validate(cfg);
  return cfg;
}

std::string render(const ExperimentConfig& cfg) {
  YAML::Emitter out;
  // Shortest representation that reads back to the same double.
  auto num = [](double v) { return fmt::format("{}", v); };
  auto seq = [&](const Vector& v) {
    out << YAML::Flow << YAML::BeginSeq;
    for (Eigen::Index i = 0; i < v.size(); ++i) out << num(v[i]);
    out << YAML::EndSeq;
  };
  out << YAML::BeginMap;
  out << YAML::Key << "command" << YAML::Value << std::string(to_string(cfg.command));
  out << YAML::Key << "op" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << cfg.op.kind;
  out << YAML::Key << "alpha" << YAML::Value << num(cfg.op.alpha);
  if (cfg.op.q.size() > 0) {
    out << YAML::Key << "Q" << YAML::Value << YAML::BeginSeq;
    for (Eigen::Index r = 0; r < cfg.op.q.rows(); ++r) seq(cfg.op.q.row(r).transpose());
    out << YAML::EndSeq;
  }
  if (cfg.op.b.size() > 0) {
    out << YAML::Key << "b" << YAML::Value;
    seq(cfg.op.b);
  }
  out << YAML::EndMap;
  out << YAML::Key << "x0" << YAML::Value;
  seq(cfg.x0);
  out << YAML::Key << "theta" << YAML::Value << num(cfg.theta);
  out << YAML::Key << "sigma" << YAML::Value << num(cfg.sigma);
  out << YAML::Key << "sigma_l" << YAML::Value << num(cfg.sigma_l);
  out << YAML::Key << "sigma_u" << YAML::Value << num(cfg.sigma_u);
  if (cfg.estimate_L) {
    out << YAML::Key << "L" << YAML::Value << "estimate";
  } else if (cfg.L) {
    out << YAML::Key << "L" << YAML::Value << num(*cfg.L);
  }
  out << YAML::Key << "t_end" << YAML::Value << num(cfg.t_end);
  out << YAML::Key << "h" << YAML::Value << num(cfg.h);
  out << YAML::Key << "sample_stride" << YAML::Value << cfg.sample_stride;
  out << YAML::Key << "max_iter" << YAML::Value << cfg.max_iter;
  out << YAML::Key << "grad_tol" << YAML::Value << num(cfg.grad_tol);
  out << YAML::Key << "rel_tol" << YAML::Value << num(cfg.rel_tol);
  if (!cfg.output_path.empty()) {
    out << YAML::Key << "output_path" << YAML::Value << YAML::DoubleQuoted << cfg.output_path;
  }
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace proxflow
