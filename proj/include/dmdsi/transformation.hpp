#pragma once

#include <optional>
#include <utility>

#include "dmdsi/dmd.hpp"
#include "dmdsi/linalg.hpp"
#include "dmdsi/trajectory.hpp"

namespace dmdsi {

/// An invertible state-space transformation with its inverse computed and
/// verified once at construction (T * T^-1 = I to 1e-10).
class Transformation {
 public:
  explicit Transformation(Matrix t) : t_(std::move(t)) {
    require_nonempty(t_, "transformation");
    require_square(t_, "transformation");
    require_finite(t_, "transformation");
    const Index n = t_.rows();
    t_inv_ = solve_linear(t_, Matrix::Identity(n, n));
    const double residual = (t_ * t_inv_ - Matrix::Identity(n, n)).norm();
    if (residual > 1e-10) {
      throw NumericalError(
          "transformation inverse failed verification (residual " +
          detail::scalar_to_string(residual) + ")");
    }
    unitary_ = (t_.transpose() * t_ - Matrix::Identity(n, n)).norm() <= 1e-10;
  }

  static Transformation identity(Index n) {
    return Transformation(Matrix::Identity(n, n));
  }

  const Matrix& matrix() const noexcept { return t_; }
  const Matrix& inverse() const noexcept { return t_inv_; }
  bool unitary() const noexcept { return unitary_; }
  Index dimension() const noexcept { return t_.rows(); }

 private:
  Matrix t_;
  Matrix t_inv_;
  bool unitary_ = false;
};

/// Maps every snapshot x to T x; the step size is preserved.
inline TrajectoryData transform_trajectory(const Transformation& t,
                                           const TrajectoryData& data) {
  if (t.dimension() != data.dimension()) {
    throw std::invalid_argument(
        "transformation dimension does not match trajectory");
  }
  std::vector<Vector> snaps;
  snaps.reserve(data.snapshots.size());
  for (const Vector& x : data.snapshots) {
    snaps.push_back(t.matrix() * x);
  }
  return TrajectoryData(std::move(snaps), data.step,
                        data.origin.empty() ? "transformed"
                                            : data.origin + ":transformed");
}

/// Residual ||(TX)^+ (TX) - X^+ X||_F. Both products equal V V^T for the
/// respective trimmed SVDs, and the difference vanishes for every invertible
/// T in exact arithmetic.
inline double verify_pseudoinverse_identity(
    const Matrix& x, const Transformation& t,
    std::optional<double> rank_tol = std::nullopt) {
  if (t.dimension() != x.rows()) {
    throw std::invalid_argument("transformation dimension does not match data");
  }
  const Matrix tx = t.matrix() * x;
  const Matrix lhs = pseudoinverse(tx, rank_tol) * tx;
  const Matrix rhs = pseudoinverse(x, rank_tol) * x;
  return (lhs - rhs).norm();
}

/// Fits the operator on the transformed trajectory and conjugates it back:
/// T^-1 * A~ * T, where A~ is the DMD matrix of (T x_i).
inline Matrix conjugated_dmd(const Transformation& t,
                             const TrajectoryData& data,
                             std::optional<double> rank_tol = std::nullopt) {
  const DMDModel transformed = dmd_matrix(transform_trajectory(t, data),
                                          rank_tol);
  return t.inverse() * transformed.A_dmd * t.matrix();
}

struct InvarianceReport {
  /// ||A_dmd X - T^-1 A~ T X||_F; vanishes for every invertible T.
  double residual_on_image = 0.0;
  /// ||A_dmd - T^-1 A~ T||_F; vanishes only in the cases below.
  double full_equality_residual = 0.0;
  /// Full equality is guaranteed iff T is unitary or X has full row rank.
  bool full_equality_expected = false;
};

/// Quantifies how the fitted operator responds to transforming the data:
/// invariance always holds on the image of X, and in the orthogonal
/// complement only for unitary T or full-rank data.
inline InvarianceReport verify_image_invariance(
    const TrajectoryData& data, const Transformation& t,
    std::optional<double> rank_tol = std::nullopt) {
  const DMDModel model = dmd_matrix(data, rank_tol);
  const Matrix conjugated = conjugated_dmd(t, data, rank_tol);
  const auto [x, z] = build_data_matrices(data);

  InvarianceReport report;
  report.residual_on_image = (model.A_dmd * x - conjugated * x).norm();
  report.full_equality_residual = (model.A_dmd - conjugated).norm();
  report.full_equality_expected =
      t.unitary() || model.rank == model.state_dim;
  return report;
}

}  // namespace dmdsi
