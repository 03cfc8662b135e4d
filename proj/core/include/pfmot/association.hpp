#pragma once

#include <Eigen/Core>

namespace pfmot {

/// Input and output messages of the iterative data-association loop.
///
/// beta is n_p x (n_m + 1) with column 0 the missed-detection entry. xi holds
/// xi_m(0) only; xi_m(j) for j >= 1 is identically one. kappa (n_p x (n_m + 1))
/// and iota (n_m x (n_p + 1)) are filled by run_spa_da.
struct AssociationTables {
  Eigen::MatrixXd beta;
  Eigen::VectorXd xi;
  Eigen::MatrixXd kappa;
  Eigen::MatrixXd iota;

  int iterations = 0;
  bool converged = false;

  [[nodiscard]] Eigen::Index num_objects() const { return beta.rows(); }
  [[nodiscard]] Eigen::Index num_measurements() const { return xi.size(); }
};

struct SpaOptions {
  int max_iters = 200;
  double tol = 1e-6;
};

/// Loopy sum-product over the object/measurement association graph.
///
/// Convergence is measured on the measurement-to-object messages as the
/// largest change relative to the message magnitude.
AssociationTables run_spa_da(AssociationTables tables, const SpaOptions& options = {});

/// Approximate marginals p(a_j = a) proportional to beta_j(a) * kappa_j(a).
Eigen::MatrixXd association_marginals(const AssociationTables& tables);

}  // namespace pfmot
