#pragma once

#include <vector>

#include <Eigen/Core>

namespace pfmot {

struct OspaParams {
  double cutoff = 50.0;
  double order = 1.0;

  /// Throws InvalidParameter unless cutoff > 0 and order >= 1.
  void validate() const;
};

struct Assignment {
  /// row_to_col[i] is the column assigned to row i.
  std::vector<int> row_to_col;
  double cost = 0.0;
};

/// Minimum-cost assignment of every row to a distinct column (rows <= cols),
/// or of every column to a distinct row when there are more rows. In the
/// latter case unassigned rows map to -1.
Assignment optimal_assignment(const Eigen::MatrixXd& cost);

using PointSet = std::vector<Eigen::Vector3d>;

double ospa(const PointSet& estimated, const PointSet& truth, const OspaParams& params = {});

/// Per-column mean of a runs x steps table.
Eigen::VectorXd mospa(const std::vector<std::vector<double>>& per_run);

}  // namespace pfmot
