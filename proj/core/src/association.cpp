#include "pfmot/association.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pfmot/error.hpp"

namespace pfmot {

namespace {

void validate(const AssociationTables& t) {
  if (t.beta.cols() != t.xi.size() + 1) {
    throw InvalidParameter("association: beta must have one column per measurement plus one");
  }
  if (!t.beta.allFinite() || (t.beta.array() < 0.0).any()) {
    throw InvalidParameter("association: beta entries must be finite and nonnegative");
  }
  if (t.beta.rows() > 0 && (t.beta.col(0).array() <= 0.0).any()) {
    throw InvalidParameter("association: missed-detection entries beta_j(0) must be positive");
  }
  if (!t.xi.allFinite() || (t.xi.array() < 0.0).any()) {
    throw InvalidParameter("association: xi entries must be finite and nonnegative");
  }
}

void check_finite(const Eigen::MatrixXd& m, int iteration) {
  if (!m.allFinite()) {
    throw NumericalError("association: non-finite message at iteration " + std::to_string(iteration));
  }
}

}  // namespace

AssociationTables run_spa_da(AssociationTables t, const SpaOptions& options) {
  validate(t);
  const Eigen::Index n_p = t.num_objects();
  const Eigen::Index n_m = t.num_measurements();

  t.kappa = Eigen::MatrixXd::Ones(n_p, n_m + 1);
  t.iota = Eigen::MatrixXd::Ones(n_m, n_p + 1);
  t.iterations = 0;
  t.converged = true;
  if (n_p == 0 || n_m == 0) return t;

  // nu(j, m): measurement m -> object j; phi(j, m): object j -> measurement m.
  Eigen::MatrixXd nu = Eigen::MatrixXd::Ones(n_p, n_m);
  Eigen::MatrixXd phi(n_p, n_m);
  Eigen::VectorXd prefix(std::max(n_p, n_m) + 1);
  Eigen::VectorXd suffix(std::max(n_p, n_m) + 1);

  t.converged = false;
  for (int it = 1; it <= options.max_iters; ++it) {
    t.iterations = it;

    // Exclusive sums use prefix/suffix accumulation so a dominant term does
    // not cancel the remaining ones.
    for (Eigen::Index j = 0; j < n_p; ++j) {
      prefix(0) = 0.0;
      for (Eigen::Index m = 0; m < n_m; ++m) prefix(m + 1) = prefix(m) + t.beta(j, m + 1) * nu(j, m);
      suffix(n_m) = 0.0;
      for (Eigen::Index m = n_m; m-- > 0;) suffix(m) = suffix(m + 1) + t.beta(j, m + 1) * nu(j, m);
      for (Eigen::Index m = 0; m < n_m; ++m) {
        phi(j, m) = t.beta(j, m + 1) / (t.beta(j, 0) + prefix(m) + suffix(m + 1));
      }
    }
    check_finite(phi, it);

    double max_change = 0.0;
    for (Eigen::Index m = 0; m < n_m; ++m) {
      prefix(0) = 0.0;
      for (Eigen::Index j = 0; j < n_p; ++j) prefix(j + 1) = prefix(j) + phi(j, m);
      suffix(n_p) = 0.0;
      for (Eigen::Index j = n_p; j-- > 0;) suffix(j) = suffix(j + 1) + phi(j, m);
      for (Eigen::Index j = 0; j < n_p; ++j) {
        const double updated = 1.0 / (t.xi(m) + prefix(j) + suffix(j + 1));
        const double scale = std::max(std::abs(updated), std::abs(nu(j, m)));
        if (scale > 0.0) max_change = std::max(max_change, std::abs(updated - nu(j, m)) / scale);
        nu(j, m) = updated;
      }
    }
    check_finite(nu, it);

    if (max_change < options.tol) {
      t.converged = true;
      break;
    }
  }

  t.kappa.rightCols(n_m) = nu;
  t.iota.rightCols(n_p) = phi.transpose();
  return t;
}

Eigen::MatrixXd association_marginals(const AssociationTables& t) {
  if (t.kappa.rows() != t.beta.rows() || t.kappa.cols() != t.beta.cols()) {
    throw InvalidParameter("association marginals: kappa not filled");
  }
  Eigen::MatrixXd p = t.beta.cwiseProduct(t.kappa);
  for (Eigen::Index j = 0; j < p.rows(); ++j) {
    const double s = p.row(j).sum();
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw DegenerateError("association marginals: row " + std::to_string(j) + " has no mass");
    }
    p.row(j) /= s;
  }
  return p;
}

}  // namespace pfmot
