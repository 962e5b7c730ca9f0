#pragma once

#include <optional>

#include "dmdsi/linalg.hpp"

namespace dmdsi {

/// Block-triangular benchmark dynamics on R^{2N}: with D = diag(0,...,N-1),
///
///   F = [ 0   2D   ]          exp(t F) = [ I   4(I - exp(-t D / 2)) ]
///       [ 0  -D/2  ],                    [ 0   exp(-t D / 2)        ]
///
/// The second block decays diagonally and drives the first. The system is
/// stable but not exponentially stable, the flow map is available in closed
/// form, and the reachable space from any initial value has dimension at
/// most N (with equality iff the initial value has no zero entries).
struct BenchmarkSystem {
  Index block_size = 0;  ///< N; the state dimension is 2N
  Matrix F;

  Index dimension() const { return 2 * block_size; }

  /// Closed-form flow map exp(t F), evaluated without a matrix exponential.
  Matrix flow(double t) const {
    const Index n = block_size;
    const Vector decay =
        (-0.5 * t * Vector::LinSpaced(n, 0.0, static_cast<double>(n - 1)))
            .array()
            .exp();
    Matrix out = Matrix::Zero(2 * n, 2 * n);
    out.topLeftCorner(n, n).setIdentity();
    out.topRightCorner(n, n) =
        Matrix((4.0 * (Vector::Ones(n) - decay)).asDiagonal());
    out.bottomRightCorner(n, n) = Matrix(decay.asDiagonal());
    return out;
  }

  /// [1, 2, ..., 2N]
  Vector default_initial_state() const {
    return Vector::LinSpaced(2 * block_size, 1.0,
                             static_cast<double>(2 * block_size));
  }

  /// Numerical rank of the Krylov matrix [x0, F x0, ..., F^{2N-1} x0]:
  /// the dimension of the reachable space from x0.
  Index controllability_dimension(
      const Vector& x0, std::optional<double> rank_tol = std::nullopt) const {
    if (x0.size() != dimension()) {
      throw std::invalid_argument("initial state dimension mismatch");
    }
    Matrix krylov(dimension(), dimension());
    krylov.col(0) = x0;
    for (Index j = 1; j < dimension(); ++j) {
      krylov.col(j) = F * krylov.col(j - 1);
    }
    return trimmed_svd(krylov, rank_tol).rank;
  }
};

inline BenchmarkSystem build_benchmark_system(Index block_size) {
  if (block_size < 1) {
    throw std::invalid_argument("block size must be at least 1");
  }
  const Index n = block_size;
  const Vector delta = Vector::LinSpaced(n, 0.0, static_cast<double>(n - 1));
  BenchmarkSystem sys;
  sys.block_size = n;
  sys.F = Matrix::Zero(2 * n, 2 * n);
  sys.F.topRightCorner(n, n) = Matrix((2.0 * delta).asDiagonal());
  sys.F.bottomRightCorner(n, n) = Matrix((-0.5 * delta).asDiagonal());
  return sys;
}

}  // namespace dmdsi
