#include "pfmot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pfmot/error.hpp"

namespace pfmot {

void OspaParams::validate() const {
  if (!(cutoff > 0.0)) throw InvalidParameter("OSPA cutoff must be > 0");
  if (!(order >= 1.0)) throw InvalidParameter("OSPA order must be >= 1");
}

namespace {

// Shortest augmenting path (Jonker-Volgenant style potentials), n <= m.
std::vector<int> solve_rows_le_cols(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

Assignment optimal_assignment(const Eigen::MatrixXd& cost) {
  if (!cost.allFinite()) throw InvalidParameter("optimal_assignment: costs must be finite");
  Assignment out;
  if (cost.rows() == 0 || cost.cols() == 0) {
    out.row_to_col.assign(static_cast<std::size_t>(cost.rows()), -1);
    return out;
  }
  if (cost.rows() <= cost.cols()) {
    out.row_to_col = solve_rows_le_cols(cost);
  } else {
    const std::vector<int> col_to_row = solve_rows_le_cols(cost.transpose());
    out.row_to_col.assign(static_cast<std::size_t>(cost.rows()), -1);
    for (std::size_t j = 0; j < col_to_row.size(); ++j) {
      out.row_to_col[static_cast<std::size_t>(col_to_row[j])] = static_cast<int>(j);
    }
  }
  for (std::size_t i = 0; i < out.row_to_col.size(); ++i) {
    if (out.row_to_col[i] >= 0) out.cost += cost(static_cast<Eigen::Index>(i), out.row_to_col[i]);
  }
  return out;
}

double ospa(const PointSet& estimated, const PointSet& truth, const OspaParams& params) {
  params.validate();
  const PointSet& small = estimated.size() <= truth.size() ? estimated : truth;
  const PointSet& large = estimated.size() <= truth.size() ? truth : estimated;
  const auto n = static_cast<Eigen::Index>(small.size());
  const auto m = static_cast<Eigen::Index>(large.size());
  if (m == 0) return 0.0;

  const double c_p = std::pow(params.cutoff, params.order);
  double total = 0.0;
  if (n > 0) {
    Eigen::MatrixXd cost(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        const double d = std::min((small[i] - large[j]).norm(), params.cutoff);
        cost(i, j) = std::pow(d, params.order);
      }
    }
    // Summing in sorted order makes the result independent of argument order.
    const Assignment a = optimal_assignment(cost);
    std::vector<double> matched;
    for (Eigen::Index i = 0; i < n; ++i) matched.push_back(cost(i, a.row_to_col[static_cast<std::size_t>(i)]));
    std::sort(matched.begin(), matched.end());
    for (double v : matched) total += v;
  }
  total += c_p * static_cast<double>(m - n);
  return std::min(params.cutoff, std::pow(total / static_cast<double>(m), 1.0 / params.order));
}

Eigen::VectorXd mospa(const std::vector<std::vector<double>>& per_run) {
  if (per_run.empty() || per_run.front().empty()) throw InvalidParameter("mospa: empty table");
  const std::size_t steps = per_run.front().size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(steps));
  for (const auto& row : per_run) {
    if (row.size() != steps) throw InvalidParameter("mospa: table is not rectangular");
    for (std::size_t k = 0; k < steps; ++k) out(static_cast<Eigen::Index>(k)) += row[k];
  }
  return out / static_cast<double>(per_run.size());
}

}  // namespace pfmot
