#pragma once

#include <Eigen/Dense>

namespace fjres::numerics {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Reciprocal condition threshold: systems with rcond below this are rejected.
inline constexpr double kMinReciprocalCondition = 1e-12;

/// Largest size solved through the Kronecker (vectorized) Lyapunov system;
/// larger problems go through the doubling iteration.
inline constexpr Eigen::Index kKroneckerLyapunovMaxSize = 12;

/// Solves A·X = B. Throws NumericalError when A is singular or its condition
/// estimate exceeds 1e12, or when the residual check fails.
Matrix solve_linear(const Matrix& a, const Matrix& b);

/// Inverse of a well-conditioned square matrix (same guard as solve_linear).
Matrix inverse(const Matrix& a);

/// Solves P = A·P·Aᵀ + S for ρ(A) < 1. Output is symmetrized.
Matrix solve_discrete_lyapunov(const Matrix& a, const Matrix& s);

// Both strategies are exposed so tests can compare them.
Matrix lyapunov_kronecker(const Matrix& a, const Matrix& s);
Matrix lyapunov_doubling(const Matrix& a, const Matrix& s);

/// Discrete Lyapunov solve for symmetric A given its eigendecomposition
/// A = U·diag(mu)·Uᵀ. Runs in a handful of matrix products.
Matrix lyapunov_symmetric(const Vector& mu, const Matrix& u, const Matrix& s);

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns
};

/// Eigendecomposition of a symmetric matrix; throws InvalidArgument otherwise.
SymmetricEigen eig_sym(const Matrix& a);

double spectral_radius(const Matrix& a);

bool is_symmetric(const Matrix& a, double tol = 1e-12);
bool is_diagonal(const Matrix& a, double tol = 0.0);

/// Entrywise infinity norm: max row absolute sum.
double norm_inf(const Matrix& a);

/// Symmetric PSD square root factor F with F·Fᵀ = A (eigenvalues clipped at 0).
Matrix psd_factor(const Matrix& a);

}  // namespace fjres::numerics
