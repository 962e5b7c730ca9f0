#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dmdsi/linalg.hpp"
#include "dmdsi/trajectory.hpp"

namespace dmdsi {

/// An s-stage Runge-Kutta method as the pair (stage matrix, weights). Node
/// coefficients are not needed for autonomous linear dynamics.
struct ButcherTableau {
  Matrix stage_matrix;  ///< s x s coefficients
  Vector weights;       ///< s weights
  std::string name;
  int declared_order = 0;

  Index stages() const { return weights.size(); }
};

inline const std::vector<std::string>& builtin_tableau_names() {
  static const std::vector<std::string> names{
      "explicit-euler", "implicit-euler", "implicit-midpoint", "heun", "rk4"};
  return names;
}

inline ButcherTableau builtin_tableau(std::string_view name) {
  ButcherTableau t;
  t.name = std::string(name);
  if (name == "explicit-euler") {
    t.stage_matrix = Matrix::Zero(1, 1);
    t.weights = Vector::Ones(1);
    t.declared_order = 1;
  } else if (name == "implicit-euler") {
    t.stage_matrix = Matrix::Ones(1, 1);
    t.weights = Vector::Ones(1);
    t.declared_order = 1;
  } else if (name == "implicit-midpoint") {
    t.stage_matrix = Matrix::Constant(1, 1, 0.5);
    t.weights = Vector::Ones(1);
    t.declared_order = 2;
  } else if (name == "heun") {
    t.stage_matrix = Matrix::Zero(2, 2);
    t.stage_matrix(1, 0) = 1.0;
    t.weights = Vector::Constant(2, 0.5);
    t.declared_order = 2;
  } else if (name == "rk4") {
    t.stage_matrix = Matrix::Zero(4, 4);
    t.stage_matrix(1, 0) = 0.5;
    t.stage_matrix(2, 1) = 0.5;
    t.stage_matrix(3, 2) = 1.0;
    t.weights = Vector(4);
    t.weights << 1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0;
    t.declared_order = 4;
  } else {
    std::string options;
    for (const std::string& n : builtin_tableau_names()) {
      options += options.empty() ? n : ", " + n;
    }
    throw std::invalid_argument("unknown tableau '" + std::string(name) +
                                "'; available: " + options);
  }
  return t;
}

namespace detail {

inline void check_rk_inputs(const ButcherTableau& tableau, const Matrix& f,
                            double h) {
  require_nonempty(f, "system matrix");
  require_square(f, "system matrix");
  require_finite(f, "system matrix");
  if (tableau.stage_matrix.rows() != tableau.stages() ||
      tableau.stage_matrix.cols() != tableau.stages() ||
      tableau.stages() == 0) {
    throw std::invalid_argument("malformed tableau '" + tableau.name + "'");
  }
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("step size must be positive and finite");
  }
}

/// The sn x sn stage-system matrix I - h * (stage_matrix (x) F).
inline Matrix stage_system_matrix(const ButcherTableau& tableau,
                                  const Matrix& f, double h) {
  const Index sn = tableau.stages() * f.rows();
  return Matrix::Identity(sn, sn) -
         h * kronecker_product(tableau.stage_matrix, f);
}

}  // namespace detail

struct StepAdmissibility {
  bool admissible = false;
  double smallest_pivot = 0.0;
};

/// A step size is admissible when the stage-system matrix I - h (A (x) F)
/// is numerically nonsingular. Returns a verdict with the smallest pivot
/// as a diagnostic; never throws for singular systems.
inline StepAdmissibility check_step_admissible(const ButcherTableau& tableau,
                                               const Matrix& f, double h) {
  detail::check_rk_inputs(tableau, f, h);
  PivotedSolver solver(detail::stage_system_matrix(tableau, f, h));
  return {solver.nonsingular(), solver.smallest_pivot()};
}

/// The exact one-step propagator of a Runge-Kutta method applied to the
/// linear system x' = F x.
struct DiscreteSystem {
  Matrix A_h;
  double h = 0.0;
  std::string source_tableau;
};

/// Assembles A_h = I + h (b^T (x) I) (I - h A (x) F)^{-1} (e (x) F) by
/// solving the sn x sn stage system once for all n right-hand-side columns;
/// the inverse is never formed explicitly.
inline DiscreteSystem discretization_matrix(const ButcherTableau& tableau,
                                            const Matrix& f, double h) {
  detail::check_rk_inputs(tableau, f, h);
  const Index s = tableau.stages();
  const Index n = f.rows();

  PivotedSolver solver(detail::stage_system_matrix(tableau, f, h));
  Matrix rhs(s * n, n);  // e (x) F: the system matrix stacked s times
  for (Index j = 0; j < s; ++j) {
    rhs.middleRows(j * n, n) = f;
  }
  const Matrix stages = solver.solve(rhs);

  Matrix a_h = Matrix::Identity(n, n);
  for (Index j = 0; j < s; ++j) {
    a_h += h * tableau.weights(j) * stages.middleRows(j * n, n);
  }
  return {std::move(a_h), h, tableau.name};
}

/// Integrates x' = F x by iterating the one-step propagator; returns the
/// snapshots x_0, ..., x_m.
inline TrajectoryData integrate(const ButcherTableau& tableau, const Matrix& f,
                                double h, const Vector& x0, Index step_count) {
  if (x0.size() != f.rows()) {
    throw std::invalid_argument("initial state dimension does not match F");
  }
  if (step_count < 0) {
    throw std::invalid_argument("step count must be non-negative");
  }
  const DiscreteSystem system = discretization_matrix(tableau, f, h);
  std::vector<Vector> snaps;
  snaps.reserve(static_cast<std::size_t>(step_count) + 1);
  snaps.push_back(x0);
  for (Index i = 0; i < step_count; ++i) {
    snaps.push_back(system.A_h * snaps.back());
  }
  return TrajectoryData(std::move(snaps), h, tableau.name);
}

/// Geometric-halving ladder used by the convergence utilities.
inline constexpr std::array<double, 5> kDefaultStepLadder{0.2, 0.1, 0.05,
                                                          0.025, 0.0125};

struct PowerLawFit {
  double slope = 0.0;
  std::size_t points_used = 0;
};

/// Least-squares slope of log(error) against log(h). Samples whose error is
/// at or below the floor are dropped (round-off guard).
inline PowerLawFit fit_power_law(
    std::span<const std::pair<double, double>> samples, double error_floor) {
  std::vector<std::pair<double, double>> kept;
  for (const auto& [h, err] : samples) {
    if (err > error_floor && h > 0.0) {
      kept.emplace_back(std::log(h), std::log(err));
    }
  }
  if (kept.size() < 2) {
    throw std::invalid_argument(
        "power-law fit needs at least two samples above the error floor");
  }
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : kept) {
    mean_x += x;
    mean_y += y;
  }
  mean_x /= static_cast<double>(kept.size());
  mean_y /= static_cast<double>(kept.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : kept) {
    sxx += (x - mean_x) * (x - mean_x);
    sxy += (x - mean_x) * (y - mean_y);
  }
  return {sxy / sxx, kept.size()};
}

struct OrderEstimate {
  double slope = 0.0;
  std::size_t points_used = 0;
  std::vector<std::pair<double, double>> samples;  ///< (h, error at t_end)
};

/// Empirical global convergence order: integrates to t_end for every ladder
/// step, measures the end-point error against the exact flow exp(t F) x0,
/// and fits the log-log slope. Ladder points below the round-off floor
/// 1e3 * eps * ||x(t_end)|| are excluded from the regression.
inline OrderEstimate empirical_order(const ButcherTableau& tableau,
                                     const Matrix& f, const Vector& x0,
                                     double t_end,
                                     std::span<const double> ladder) {
  if (ladder.size() < 3) {
    throw std::invalid_argument(
        "order estimation needs at least three ladder points");
  }
  if (!(t_end > 0.0)) {
    throw std::invalid_argument("t_end must be positive");
  }

  OrderEstimate out;
  double floor_scale = 0.0;
  for (double h : ladder) {
    const Index steps = static_cast<Index>(std::llround(t_end / h));
    if (steps < 1) {
      throw std::invalid_argument("ladder step exceeds t_end");
    }
    const double t = static_cast<double>(steps) * h;
    const TrajectoryData traj = integrate(tableau, f, h, x0, steps);
    const Vector exact = matrix_exponential(t * f) * x0;
    floor_scale = std::max(floor_scale, exact.norm());
    out.samples.emplace_back(h, (exact - traj.snapshots.back()).norm());
  }
  const PowerLawFit fit =
      fit_power_law(out.samples, 1e3 * kEps * floor_scale);
  out.slope = fit.slope;
  out.points_used = fit.points_used;
  return out;
}

}  // namespace dmdsi
