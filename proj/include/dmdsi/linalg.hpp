#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace dmdsi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

/// Base class for runtime numerical failures (singular solves, missing
/// principal logarithms, non-converged factorizations). The CLI maps these
/// to exit code 3, as opposed to input/format errors (exit code 2).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A pivoted factorization found the matrix numerically singular; carries the
/// offending pivot magnitude.
class SingularMatrixError : public NumericalError {
 public:
  SingularMatrixError(const std::string& what, double pivot)
      : NumericalError(what), pivot_(pivot) {}
  double pivot() const noexcept { return pivot_; }

 private:
  double pivot_;
};

class NoPrincipalLogarithmError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SvdConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

namespace detail {

inline std::string scalar_to_string(double v) {
  std::ostringstream os;
  os.precision(6);
  os << std::scientific << v;
  return os.str();
}

}  // namespace detail

inline void require_finite(const Matrix& m, const char* name) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(name) +
                                " contains non-finite entries");
  }
}

inline void require_nonempty(const Matrix& m, const char* name) {
  if (m.size() == 0) {
    throw std::invalid_argument(std::string(name) + " is empty");
  }
}

inline void require_square(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(name) + " must be square, got " +
                                std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()));
  }
}

/// Relative singular-value cutoff used whenever no explicit tolerance is
/// given: max(rows, cols) * machine epsilon.
inline double default_rank_tolerance(const Matrix& m) {
  return static_cast<double>(std::max(m.rows(), m.cols())) * kEps;
}

/// Rank-revealing SVD that keeps only the strictly positive singular values
/// above rank_tol * sigma_max. Column signs are normalized so that the
/// largest-magnitude entry of each column of U is positive, which makes
/// factor comparisons deterministic.
struct TrimmedSVD {
  Matrix U;      ///< n x rank, orthonormal columns
  Matrix Sigma;  ///< rank x rank diagonal, strictly positive, non-increasing
  Matrix V;      ///< m x rank, orthonormal columns
  Index rank = 0;

  Vector singular_values() const { return Sigma.diagonal(); }
  Matrix reconstruct() const { return U * Sigma * V.transpose(); }
};

inline TrimmedSVD trimmed_svd(const Matrix& m,
                              std::optional<double> rank_tol = std::nullopt) {
  require_nonempty(m, "matrix");
  require_finite(m, "matrix");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw SvdConvergenceError("singular value decomposition did not converge");
  }
  const Vector& sv = svd.singularValues();
  const double tol = rank_tol.value_or(default_rank_tolerance(m));
  const double cutoff = sv.size() > 0 ? tol * sv(0) : 0.0;

  Index r = 0;
  while (r < sv.size() && sv(r) > cutoff && sv(r) > 0.0) ++r;

  TrimmedSVD out;
  out.rank = r;
  out.U = svd.matrixU().leftCols(r);
  out.V = svd.matrixV().leftCols(r);
  out.Sigma = Matrix(sv.head(r).asDiagonal());
  for (Index j = 0; j < r; ++j) {
    Index peak = 0;
    out.U.col(j).cwiseAbs().maxCoeff(&peak);
    if (out.U(peak, j) < 0.0) {
      out.U.col(j) = -out.U.col(j);
      out.V.col(j) = -out.V.col(j);
    }
  }
  return out;
}

/// Moore-Penrose pseudoinverse assembled from the trimmed SVD,
/// V * Sigma^-1 * U^T. The zero matrix maps to the (transposed-shape) zero.
inline Matrix pseudoinverse(const Matrix& m,
                            std::optional<double> rank_tol = std::nullopt) {
  const TrimmedSVD f = trimmed_svd(m, rank_tol);
  if (f.rank == 0) {
    return Matrix::Zero(m.cols(), m.rows());
  }
  return f.V * f.Sigma.diagonal().cwiseInverse().asDiagonal() *
         f.U.transpose();
}

inline Matrix matrix_exponential(const Matrix& m) {
  require_nonempty(m, "matrix");
  require_square(m, "matrix");
  require_finite(m, "matrix");
  Matrix e = m.exp();
  if (!e.allFinite()) {
    throw NumericalError("matrix exponential overflowed");
  }
  return e;
}

/// Principal matrix logarithm (inverse scaling-and-squaring on the principal
/// branch). Fails whenever an eigenvalue lies on the closed negative real
/// axis, where no principal logarithm exists.
inline Matrix principal_matrix_logarithm(const Matrix& m) {
  require_nonempty(m, "matrix");
  require_square(m, "matrix");
  require_finite(m, "matrix");

  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw NumericalError("eigenvalue computation did not converge");
  }
  const ComplexVector& eigs = es.eigenvalues();
  const double scale = eigs.cwiseAbs().maxCoeff();
  const double axis_tol = 1e-12 * scale;
  for (Index i = 0; i < eigs.size(); ++i) {
    if (std::abs(eigs(i).imag()) <= axis_tol && eigs(i).real() <= axis_tol) {
      throw NoPrincipalLogarithmError(
          "no principal logarithm: eigenvalue " +
          detail::scalar_to_string(eigs(i).real()) +
          " lies on the closed negative real axis");
    }
  }

  Matrix l = m.log();
  if (!l.allFinite()) {
    throw NumericalError("matrix logarithm produced non-finite entries");
  }
  return l;
}

/// Kronecker product [a_ij * B], size (n p) x (m q).
inline Matrix kronecker_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Pivoted LU solver with an explicit numerical-singularity verdict.
/// The matrix counts as singular when the smallest pivot does not exceed
/// dim * eps * ||A||_F. Factor once, solve for any number of right-hand sides.
class PivotedSolver {
 public:
  explicit PivotedSolver(const Matrix& a) : lu_(a), dim_(a.rows()) {
    require_nonempty(a, "coefficient matrix");
    require_square(a, "coefficient matrix");
    smallest_pivot_ = lu_.matrixLU().diagonal().cwiseAbs().minCoeff();
    threshold_ = static_cast<double>(dim_) * kEps * a.norm();
  }

  bool nonsingular() const noexcept { return smallest_pivot_ > threshold_; }
  double smallest_pivot() const noexcept { return smallest_pivot_; }
  double pivot_threshold() const noexcept { return threshold_; }
  Index dimension() const noexcept { return dim_; }

  Matrix solve(const Matrix& b) const {
    if (b.rows() != dim_) {
      throw std::invalid_argument(
          "right-hand side rows do not match coefficient matrix");
    }
    if (!nonsingular()) {
      throw SingularMatrixError(
          "linear solve failed: matrix numerically singular (pivot " +
              detail::scalar_to_string(smallest_pivot_) + ", threshold " +
              detail::scalar_to_string(threshold_) + ")",
          smallest_pivot_);
    }
    return lu_.solve(b);
  }

 private:
  Eigen::PartialPivLU<Matrix> lu_;
  Index dim_;
  double smallest_pivot_ = 0.0;
  double threshold_ = 0.0;
};

/// Solves A X = B through a pivoted LU factorization.
inline Matrix solve_linear(const Matrix& a, const Matrix& b) {
  require_nonempty(a, "coefficient matrix");
  require_square(a, "coefficient matrix");
  require_finite(a, "coefficient matrix");
  require_finite(b, "right-hand side");
  return PivotedSolver(a).solve(b);
}

/// Orthonormal basis of the orthogonal complement of the column space of a
/// matrix with orthonormal columns (n x r in, n x (n-r) out).
inline Matrix orthogonal_complement(const Matrix& u) {
  if (u.cols() == 0) {
    return Matrix::Identity(u.rows(), u.rows());
  }
  Eigen::HouseholderQR<Matrix> qr(u);
  Matrix q = qr.householderQ();
  return q.rightCols(u.rows() - u.cols());
}

}  // namespace dmdsi
