#pragma once

#include <Eigen/Core>

namespace proxflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Throws ValidationError unless every entry is finite and the dimension is positive.
void require_finite(const Vector& v, const char* what);

/// Throws DimensionMismatch when the sizes differ.
void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what);

bool is_symmetric(const Matrix& h, double rel_tol = 1e-12);

/// Solves (H + mu I) s = b by Cholesky. H must be symmetric PSD and mu > 0,
/// so the shifted matrix is SPD; a non-positive pivot raises NumericalBreakdown.
Vector shifted_solve(const Matrix& h, double mu, const Vector& b);

/// Spectral norm of a symmetric matrix by power iteration from (1,...,1)/sqrt(n),
/// restarting from a perturbed vector if the iterate collapses.
double operator_norm_estimate(const Matrix& h);

}  // namespace proxflow
