#pragma once

#include <compare>
#include <vector>

#include <Eigen/Core>

namespace pfmot {

/// Particle sets are stored column-wise: one state per column.
using ParticleMatrix = Eigen::MatrixXd;

/// Identifies a potential object by the time step and measurement that spawned it.
struct Label {
  int k = 0;
  int m = 0;

  auto operator<=>(const Label&) const = default;
};

/// All measurements of one time step.
struct MeasurementFrame {
  int k = 0;
  std::vector<Eigen::VectorXd> z;

  [[nodiscard]] int size() const { return static_cast<int>(z.size()); }
};

/// Axis-aligned box in R^n.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  [[nodiscard]] Eigen::Index dim() const { return lower.size(); }
  [[nodiscard]] bool contains(const Eigen::VectorXd& x) const {
    return ((x.array() >= lower.array()) && (x.array() <= upper.array())).all();
  }
  [[nodiscard]] Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
  [[nodiscard]] Eigen::VectorXd widths() const { return upper - lower; }
  [[nodiscard]] double volume() const { return widths().prod(); }
};

}  // namespace pfmot
