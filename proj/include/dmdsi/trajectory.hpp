#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "dmdsi/linalg.hpp"

namespace dmdsi {

/// An ordered sequence of state snapshots x_0, ..., x_m sampled with a
/// uniform step size.
struct TrajectoryData {
  std::vector<Vector> snapshots;
  double step = 1.0;
  std::string origin;

  TrajectoryData() = default;

  TrajectoryData(std::vector<Vector> snaps, double h, std::string label = {})
      : snapshots(std::move(snaps)), step(h), origin(std::move(label)) {
    if (snapshots.empty()) {
      throw std::invalid_argument("trajectory needs at least one snapshot");
    }
    if (!(step > 0.0) || !std::isfinite(step)) {
      throw std::invalid_argument("trajectory step size must be positive");
    }
    const Index n = snapshots.front().size();
    if (n == 0) {
      throw std::invalid_argument("trajectory snapshots must be non-empty");
    }
    for (const Vector& x : snapshots) {
      if (x.size() != n) {
        throw std::invalid_argument(
            "trajectory snapshots must share one dimension");
      }
      if (!x.allFinite()) {
        throw std::invalid_argument(
            "trajectory snapshots contain non-finite entries");
      }
    }
  }

  Index dimension() const { return snapshots.front().size(); }

  /// Number of steps m (snapshot count minus one).
  Index steps() const { return static_cast<Index>(snapshots.size()) - 1; }

  /// All snapshots as columns, n x (m+1).
  Matrix snapshot_matrix() const {
    Matrix out(dimension(), static_cast<Index>(snapshots.size()));
    for (Index i = 0; i < out.cols(); ++i) {
      out.col(i) = snapshots[static_cast<std::size_t>(i)];
    }
    return out;
  }
};

}  // namespace dmdsi
