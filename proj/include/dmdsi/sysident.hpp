#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "dmdsi/dmd.hpp"
#include "dmdsi/linalg.hpp"
#include "dmdsi/runge_kutta.hpp"

namespace dmdsi {

/// The data span does not cover the full state space, so the requested
/// recovery is not determined by the data.
class RankConditionError : public NumericalError {
 public:
  RankConditionError(const std::string& what, Index rank, Index required)
      : NumericalError(what), rank_(rank), required_(required) {}
  Index rank() const noexcept { return rank_; }
  Index required() const noexcept { return required_; }

 private:
  Index rank_;
  Index required_;
};

/// Result of a system-matrix recovery. `recovered` is only populated when
/// `inverse_existed` is true.
struct IdentificationReport {
  Matrix recovered;
  std::string method;  ///< "discrete" | "log-exact" | "reverse-rk1"
  std::optional<double> residual;  ///< ||truth - recovered||_F when truth given
  std::optional<double> projected_residual;  ///< ||A_dmd - truth U U^T||_F
  bool rank_condition_met = false;
  bool inverse_existed = false;
  double h = 0.0;
  std::optional<double> smallest_pivot;  ///< diagnostic for a singular bracket
};

namespace detail {

inline void check_rank_condition(const DMDModel& model, const char* what) {
  if (model.rank < model.state_dim) {
    throw RankConditionError(
        std::string(what) + " requires full-rank data (rank " +
            std::to_string(model.rank) + " of required " +
            std::to_string(model.state_dim) + ")",
        model.rank, model.state_dim);
  }
}

}  // namespace detail

/// Reads the fitted operator as the discrete system matrix. With full-rank
/// data this is the true matrix; otherwise it is the true matrix restricted
/// to the data span (A U U^T), which the report quantifies when the truth
/// is supplied.
inline IdentificationReport identify_discrete(
    const TrajectoryData& data, const std::optional<Matrix>& truth = {},
    std::optional<double> rank_tol = std::nullopt) {
  const DMDModel model = dmd_matrix(data, rank_tol);

  IdentificationReport report;
  report.method = "discrete";
  report.recovered = model.A_dmd;
  report.rank_condition_met = model.rank == model.state_dim;
  report.inverse_existed = true;
  report.h = data.step;
  if (truth.has_value()) {
    if (truth->rows() != model.state_dim || truth->cols() != model.state_dim) {
      throw std::invalid_argument("truth matrix dimension mismatch");
    }
    const Matrix& u = model.svd.U;
    report.projected_residual =
        (model.A_dmd - (*truth) * u * u.transpose()).norm();
    if (report.rank_condition_met) {
      report.residual = (model.A_dmd - *truth).norm();
    }
  }
  return report;
}

/// Recovers the continuous system matrix from exactly sampled data as
/// log(A_dmd) / h. Requires full-rank data and a principal logarithm.
inline IdentificationReport recover_continuous_exact_sampling(
    const DMDModel& model, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("step size must be positive and finite");
  }
  detail::check_rank_condition(model, "matrix-logarithm recovery");

  IdentificationReport report;
  report.method = "log-exact";
  report.rank_condition_met = true;
  report.h = h;
  report.recovered = principal_matrix_logarithm(model.A_dmd) / h;
  report.inverse_existed = true;
  return report;
}

/// Recovers the continuous system matrix behind a one-stage Runge-Kutta
/// discretization (alpha, beta):
///
///   F = -(1/h) (I - A_dmd) (alpha A_dmd + (beta - alpha) I)^{-1},
///
/// realized as a pivoted linear solve. A numerically singular bracket is
/// reported through inverse_existed = false with the pivot as diagnostic.
inline IdentificationReport recover_continuous_onestage(const DMDModel& model,
                                                        double alpha,
                                                        double beta,
                                                        double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("step size must be positive and finite");
  }
  if (!std::isfinite(alpha) || !std::isfinite(beta)) {
    throw std::invalid_argument("tableau coefficients must be finite");
  }
  detail::check_rank_condition(model, "one-stage recovery");

  const Index n = model.state_dim;
  const Matrix identity = Matrix::Identity(n, n);
  const Matrix bracket = alpha * model.A_dmd + (beta - alpha) * identity;

  IdentificationReport report;
  report.method = "reverse-rk1";
  report.rank_condition_met = true;
  report.h = h;

  // right division: solve F * bracket = -(1/h)(I - A_dmd) via the transpose
  PivotedSolver solver(bracket.transpose());
  report.smallest_pivot = solver.smallest_pivot();
  if (!solver.nonsingular()) {
    report.inverse_existed = false;
    return report;
  }
  const Matrix rhs = (-1.0 / h) * (identity - model.A_dmd).transpose();
  report.recovered = solver.solve(rhs).transpose();
  report.inverse_existed = true;
  return report;
}

/// Dispatches to recover_continuous_onestage with the (alpha, beta) pair of
/// a named one-stage method.
inline IdentificationReport table1_specialization(std::string_view method_name,
                                                  const DMDModel& model,
                                                  double h) {
  if (method_name == "explicit-euler") {
    return recover_continuous_onestage(model, 0.0, 1.0, h);
  }
  if (method_name == "implicit-euler") {
    return recover_continuous_onestage(model, 1.0, 1.0, h);
  }
  if (method_name == "implicit-midpoint") {
    return recover_continuous_onestage(model, 0.5, 1.0, h);
  }
  throw std::invalid_argument(
      "unknown one-stage method '" + std::string(method_name) +
      "'; available: explicit-euler, implicit-euler, implicit-midpoint");
}

/// Two scalar systems that Heun's method maps to the same one-step
/// propagator: recovering continuous dynamics behind a two-stage method is
/// ill-posed.
struct HeunAmbiguityWitness {
  double f1 = 0.0;
  double f2 = 0.0;
  double a_h1 = 0.0;
  double a_h2 = 0.0;
  double discrepancy = 0.0;
};

/// Builds the scalar pair f1 = 0 and f2 = -2/h, discretizes both with Heun's
/// method, and returns |A_h(f1) - A_h(f2)| (zero to machine precision).
inline HeunAmbiguityWitness demonstrate_heun_ambiguity(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("step size must be positive and finite");
  }
  const ButcherTableau heun = builtin_tableau("heun");
  Matrix f1(1, 1);
  f1 << 0.0;
  Matrix f2(1, 1);
  f2 << -2.0 / h;

  HeunAmbiguityWitness witness;
  witness.f1 = f1(0, 0);
  witness.f2 = f2(0, 0);
  witness.a_h1 = discretization_matrix(heun, f1, h).A_h(0, 0);
  witness.a_h2 = discretization_matrix(heun, f2, h).A_h(0, 0);
  witness.discrepancy = std::abs(witness.a_h1 - witness.a_h2);
  return witness;
}

/// Maximum deviation of the model's prediction from the exact flow
/// exp(i h F) x0 over i = 0..steps. The initial value must lie in the data
/// span (orthogonal component below 1e-10 * ||x0||).
inline double dmd_error_vs_flow(const DMDModel& model, const Matrix& f_true,
                                const Vector& x0, Index steps, double h) {
  require_square(f_true, "system matrix");
  if (f_true.rows() != model.state_dim) {
    throw std::invalid_argument("system matrix dimension does not match model");
  }
  if (steps < 0 || !(h > 0.0)) {
    throw std::invalid_argument("need steps >= 0 and h > 0");
  }
  const SpanSplit split = project_onto_data_span(model, x0);
  const double perp = split.orthogonal.norm();
  if (perp > 1e-10 * x0.norm()) {
    throw std::invalid_argument(
        "initial value lies outside the data span (orthogonal component " +
        detail::scalar_to_string(perp) + ")");
  }

  double max_error = 0.0;
  Vector prediction = x0;
  for (Index i = 0; i <= steps; ++i) {
    const Vector exact =
        matrix_exponential(static_cast<double>(i) * h * f_true) * x0;
    max_error = std::max(max_error, (exact - prediction).norm());
    if (i < steps) {
      prediction = model.A_dmd * prediction;
    }
  }
  return max_error;
}

}  // namespace dmdsi
