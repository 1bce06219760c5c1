#include "fjres/numerics.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "fjres/error.hpp"

namespace fjres::numerics {

namespace {

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw InvalidArgument(std::string(what) + ": matrix must be square");
  }
}

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) {
    throw NumericalError(std::string(what) + ": non-finite entries");
  }
}

}  // namespace

double norm_inf(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  if (a.size() == 0) return true;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

bool is_diagonal(const Matrix& a, double tol) {
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i != j && std::abs(a(i, j)) > tol) return false;
    }
  }
  return true;
}

Matrix solve_linear(const Matrix& a, const Matrix& b) {
  require_square(a, "solve_linear");
  if (a.rows() != b.rows()) throw InvalidArgument("solve_linear: dimension mismatch");
  require_finite(a, "solve_linear");
  if (a.rows() == 0) return Matrix(0, b.cols());

  Eigen::PartialPivLU<Matrix> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond >= kMinReciprocalCondition)) {
    throw NumericalError("solve_linear: singular or ill-conditioned matrix (rcond=" +
                         std::to_string(rcond) + ")");
  }
  Matrix x = lu.solve(b);
  require_finite(x, "solve_linear");
  const double bound = 1e-9 * norm_inf(b);
  double resid = norm_inf(a * x - b);
  if (resid > bound) {
    // one step of iterative refinement
    x += lu.solve(b - a * x);
    resid = norm_inf(a * x - b);
  }
  if (resid > bound && resid > 1e-14) {
    throw NumericalError("solve_linear: residual check failed");
  }
  return x;
}

Matrix inverse(const Matrix& a) {
  return solve_linear(a, Matrix::Identity(a.rows(), a.cols()));
}

Matrix lyapunov_kronecker(const Matrix& a, const Matrix& s) {
  const Eigen::Index n = a.rows();
  // vec(A P Aᵀ) = (A ⊗ A) vec(P), column-major vec.
  Matrix system = Matrix::Identity(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double aij = a(i, j);
      if (aij == 0.0) continue;
      system.block(i * n, j * n, n, n) -= aij * a;
    }
  }
  Eigen::Map<const Vector> rhs(s.data(), n * n);
  Vector p = solve_linear(system, rhs);
  Matrix out = Eigen::Map<Matrix>(p.data(), n, n);
  return 0.5 * (out + out.transpose());
}

Matrix lyapunov_doubling(const Matrix& a, const Matrix& s) {
  // P_{j+1} = P_j + A_j P_j A_jᵀ, A_{j+1} = A_j², which sums 2^j series terms.
  Matrix p = s;
  Matrix ak = a;
  const double snorm = std::max(norm_inf(s), 1e-300);
  for (int iter = 0; iter < 200; ++iter) {
    Matrix incr = ak * p * ak.transpose();
    p += incr;
    ak = ak * ak;
    if (norm_inf(incr) <= 1e-17 * snorm || norm_inf(ak) == 0.0) {
      return 0.5 * (p + p.transpose());
    }
    require_finite(p, "lyapunov_doubling");
  }
  throw NumericalError("lyapunov_doubling: no convergence");
}

Matrix lyapunov_symmetric(const Vector& mu, const Matrix& u, const Matrix& s) {
  Matrix st = u.transpose() * s * u;
  for (Eigen::Index j = 0; j < st.cols(); ++j) {
    for (Eigen::Index i = 0; i < st.rows(); ++i) {
      st(i, j) /= (1.0 - mu(i) * mu(j));
    }
  }
  Matrix p = u * st * u.transpose();
  return 0.5 * (p + p.transpose());
}

Matrix solve_discrete_lyapunov(const Matrix& a, const Matrix& s) {
  require_square(a, "solve_discrete_lyapunov");
  if (s.rows() != a.rows() || s.cols() != a.cols()) {
    throw InvalidArgument("solve_discrete_lyapunov: dimension mismatch");
  }
  if (a.rows() == 0) return Matrix(0, 0);
  const double rho = spectral_radius(a);
  if (!(rho < 1.0)) {
    throw NumericalError("solve_discrete_lyapunov: spectral radius " + std::to_string(rho) +
                         " is not below 1");
  }
  if (a.rows() <= kKroneckerLyapunovMaxSize) return lyapunov_kronecker(a, s);
  return lyapunov_doubling(a, s);
}

SymmetricEigen eig_sym(const Matrix& a) {
  require_square(a, "eig_sym");
  if (!is_symmetric(a, 1e-12)) throw InvalidArgument("eig_sym: matrix is not symmetric");
  require_finite(a, "eig_sym");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) throw NumericalError("eig_sym: no convergence");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

double spectral_radius(const Matrix& a) {
  require_square(a, "spectral_radius");
  if (a.rows() == 0) return 0.0;
  require_finite(a, "spectral_radius");
  if (is_symmetric(a, 1e-14)) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("spectral_radius: no convergence");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::EigenSolver<Matrix> solver(a, false);
  if (solver.info() != Eigen::Success) throw NumericalError("spectral_radius: no convergence");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix psd_factor(const Matrix& a) {
  require_square(a, "psd_factor");
  if (a.rows() == 0) return Matrix(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (a + a.transpose()));
  if (solver.info() != Eigen::Success) throw NumericalError("psd_factor: no convergence");
  const double scale = std::max(1.0, solver.eigenvalues().cwiseAbs().maxCoeff());
  if (solver.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw InvalidArgument("psd_factor: matrix is not positive semidefinite");
  }
  Vector root = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * root.asDiagonal() * solver.eigenvectors().transpose();
}

}  // namespace fjres::numerics
