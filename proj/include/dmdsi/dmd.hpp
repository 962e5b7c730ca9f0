#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dmdsi/linalg.hpp"
#include "dmdsi/trajectory.hpp"

namespace dmdsi {

/// Splits snapshots into the shifted data matrices
/// X = [x_0 ... x_{m-1}] and Z = [x_1 ... x_m], both n x m.
inline std::pair<Matrix, Matrix> build_data_matrices(
    const TrajectoryData& data) {
  if (data.snapshots.size() < 2) {
    throw std::invalid_argument(
        "need at least two snapshots to build data matrices");
  }
  const Index n = data.dimension();
  const Index m = data.steps();
  Matrix x(n, m);
  Matrix z(n, m);
  for (Index i = 0; i < m; ++i) {
    x.col(i) = data.snapshots[static_cast<std::size_t>(i)];
    z.col(i) = data.snapshots[static_cast<std::size_t>(i) + 1];
  }
  return {std::move(x), std::move(z)};
}

/// The fitted one-step operator Z X^+ together with the trimmed SVD of X.
///
/// rank_stagnated records whether the final snapshot already lies in the span
/// of the previous ones, i.e. rank([x_0 ... x_{m-1}]) == rank([x_0 ... x_m]).
/// For data generated by a linear iteration this certifies that the data span
/// is invariant, the hypothesis under which predictions inside the span are
/// exact.
struct DMDModel {
  Matrix A_dmd;
  TrimmedSVD svd;  ///< trimmed SVD of X
  Index rank = 0;
  Index state_dim = 0;
  Index sample_count = 0;  ///< columns of X
  double step = 1.0;       ///< sampling step of the training data
  bool rank_stagnated = false;
};

/// Fits the minimum-Frobenius-norm operator minimizing ||Z - M X||_F,
/// assembled through the trimmed SVD as Z V Sigma^-1 U^T (never via normal
/// equations).
inline DMDModel dmd_matrix(const TrajectoryData& data,
                           std::optional<double> rank_tol = std::nullopt) {
  auto [x, z] = build_data_matrices(data);
  TrimmedSVD svd = trimmed_svd(x, rank_tol);

  DMDModel model;
  model.state_dim = x.rows();
  model.sample_count = x.cols();
  model.rank = svd.rank;
  model.step = data.step;
  if (svd.rank == 0) {
    model.A_dmd = Matrix::Zero(x.rows(), x.rows());
  } else {
    model.A_dmd = (z * svd.V) *
                  svd.Sigma.diagonal().cwiseInverse().asDiagonal() *
                  svd.U.transpose();
  }
  model.rank_stagnated =
      trimmed_svd(data.snapshot_matrix(), rank_tol).rank == svd.rank;
  model.svd = std::move(svd);
  return model;
}

struct DMDModes {
  ComplexVector eigenvalues;
  ComplexMatrix modes;  ///< eigenvectors as columns
  bool diagonalizable = true;
};

/// Full complex eigendecomposition of the fitted operator. The flag turns
/// false when the eigenvector basis is numerically rank-deficient
/// (condition number above 1e12).
inline DMDModes dmd_modes(const DMDModel& model) {
  Eigen::EigenSolver<Matrix> es(model.A_dmd);
  if (es.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition did not converge");
  }
  DMDModes out;
  out.eigenvalues = es.eigenvalues();
  out.modes = es.eigenvectors();
  Eigen::JacobiSVD<ComplexMatrix> svd(out.modes);
  const Vector& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  out.diagonalizable = smin > 0.0 && sv(0) / smin <= 1e12;
  return out;
}

/// Iterates x_0, A x_0, ..., A^steps x_0 by repeated matrix-vector products
/// (the operator is never powered).
inline TrajectoryData predict(const DMDModel& model, const Vector& x0,
                              Index step_count) {
  if (x0.size() != model.state_dim) {
    throw std::invalid_argument("initial state dimension does not match model");
  }
  if (step_count < 0) {
    throw std::invalid_argument("step count must be non-negative");
  }
  std::vector<Vector> snaps;
  snaps.reserve(static_cast<std::size_t>(step_count) + 1);
  snaps.push_back(x0);
  for (Index i = 0; i < step_count; ++i) {
    snaps.push_back(model.A_dmd * snaps.back());
  }
  return TrajectoryData(std::move(snaps), model.step, "dmd-prediction");
}

/// Orthonormal basis of the column space of X (the subspace the data
/// explored).
inline const Matrix& reachable_basis(const DMDModel& model) {
  return model.svd.U;
}

struct SpanSplit {
  Vector in_span;     ///< U U^T x
  Vector orthogonal;  ///< x - U U^T x
};

/// Splits a state into its component inside the data span and the orthogonal
/// remainder; the two parts always sum to the input exactly.
inline SpanSplit project_onto_data_span(const DMDModel& model,
                                        const Vector& x) {
  if (x.size() != model.state_dim) {
    throw std::invalid_argument("state dimension does not match model");
  }
  Vector in_span = model.svd.U * (model.svd.U.transpose() * x);
  Vector orthogonal = x - in_span;
  return {std::move(in_span), std::move(orthogonal)};
}

}  // namespace dmdsi
