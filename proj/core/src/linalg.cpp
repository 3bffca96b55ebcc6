#include "proxflow/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "proxflow/errors.hpp"

namespace proxflow {

void require_finite(const Vector& v, const char* what) {
  if (v.size() < 1) {
    throw Error(ErrorKind::ValidationError, std::string(what) + " must have dimension >= 1");
  }
  if (!v.allFinite()) {
    throw Error(ErrorKind::ValidationError, std::string(what) + " has non-finite entries");
  }
}

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

bool is_symmetric(const Matrix& h, double rel_tol) {
  if (h.rows() != h.cols()) return false;
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  return (h - h.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Vector shifted_solve(const Matrix& h, double mu, const Vector& b) {
  if (h.rows() != h.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "shifted_solve: matrix is not square");
  }
  require_same_dim(h.rows(), b.size(), "shifted_solve");
  if (!(mu > 0.0)) {
    throw Error(ErrorKind::NumericalBreakdown, "shifted_solve: shift must be positive");
  }
  Matrix shifted = h;
  shifted.diagonal().array() += mu;
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericalBreakdown,
                "shifted_solve: non-positive pivot, matrix is not PSD");
  }
  Vector s = llt.solve(b);
  if (!s.allFinite()) {
    throw Error(ErrorKind::NumericalBreakdown, "shifted_solve: non-finite solution");
  }
  return s;
}

namespace {

// One power-iteration run. Returns a negative value if the iterate collapses
// (start vector orthogonal to every non-null eigenvector).
double power_iteration(const Matrix& h, Vector v) {
  constexpr int kMaxIter = 10000;
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < kMaxIter; ++it) {
    Vector w = h * v;
    const double norm = w.norm();
    if (norm == 0.0) return -1.0;
    // ||Hv|| is the Rayleigh quotient of H^2, so it converges monotonically
    // and is insensitive to +/- eigenvalue pairs.
    if (it > 0 && std::abs(norm - estimate) <= 1e-14 * norm) {
      return norm;
    }
    estimate = norm;
    v = w / norm;
  }
  return estimate;
}

}  // namespace

double operator_norm_estimate(const Matrix& h) {
  const Eigen::Index n = h.rows();
  if (n == 0 || h.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const double from_ones = power_iteration(h, Vector::Ones(n));
  // The all-ones start can be an exact non-dominant eigenvector (or lie in the
  // null space), so a deterministically perturbed start always runs too.
  Vector start(n);
  for (Eigen::Index i = 0; i < n; ++i) start[i] = 1.0 + 0.5 * std::sin(1.0 + static_cast<double>(i));
  const double perturbed = power_iteration(h, start);
  return std::max({from_ones, perturbed, 0.0});
}

}  // namespace proxflow
