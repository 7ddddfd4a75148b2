#include "ccrmst/assignment.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ccrmst {

AssignmentResult solve_assignment(const Eigen::MatrixXd& cost) {
  const int nr = static_cast<int>(cost.rows());
  const int nc = static_cast<int>(cost.cols());
  if (nr == 0) return {};
  if (nr > nc)
    throw std::invalid_argument("solve_assignment: more rows than columns (infeasible)");
  if (!cost.allFinite())
    throw std::invalid_argument("solve_assignment: costs must be finite");

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(nr), 0.0);
  std::vector<double> v(static_cast<std::size_t>(nc), 0.0);
  std::vector<double> shortest(static_cast<std::size_t>(nc));
  std::vector<int> col_for_row(static_cast<std::size_t>(nr), -1);
  std::vector<int> row_for_col(static_cast<std::size_t>(nc), -1);
  std::vector<int> pred(static_cast<std::size_t>(nc), -1);
  std::vector<char> col_done(static_cast<std::size_t>(nc));
  std::vector<char> row_seen(static_cast<std::size_t>(nr));

  for (int cur = 0; cur < nr; ++cur) {
    std::fill(shortest.begin(), shortest.end(), inf);
    std::fill(col_done.begin(), col_done.end(), 0);
    std::fill(row_seen.begin(), row_seen.end(), 0);

    int i = cur;
    int sink = -1;
    double min_val = 0.0;
    while (sink == -1) {
      row_seen[static_cast<std::size_t>(i)] = 1;
      double lowest = inf;
      int j_low = -1;
      for (int j = 0; j < nc; ++j) {
        auto k = static_cast<std::size_t>(j);
        if (col_done[k]) continue;
        double reduced = min_val + cost(i, j) - u[static_cast<std::size_t>(i)] - v[k];
        if (reduced < shortest[k]) {
          shortest[k] = reduced;
          pred[k] = i;
        }
        if (shortest[k] < lowest) {
          lowest = shortest[k];
          j_low = j;
        }
      }
      if (j_low < 0 || !std::isfinite(lowest))
        throw std::runtime_error("solve_assignment: no augmenting path (infeasible)");
      min_val = lowest;
      col_done[static_cast<std::size_t>(j_low)] = 1;
      if (row_for_col[static_cast<std::size_t>(j_low)] == -1)
        sink = j_low;
      else
        i = row_for_col[static_cast<std::size_t>(j_low)];
    }

    u[static_cast<std::size_t>(cur)] += min_val;
    for (int r = 0; r < nr; ++r) {
      if (r == cur || !row_seen[static_cast<std::size_t>(r)]) continue;
      u[static_cast<std::size_t>(r)] +=
          min_val - shortest[static_cast<std::size_t>(col_for_row[static_cast<std::size_t>(r)])];
    }
    for (int j = 0; j < nc; ++j) {
      auto k = static_cast<std::size_t>(j);
      if (col_done[k]) v[k] -= min_val - shortest[k];
    }

    // Augment along the predecessor chain back to the current row.
    int j = sink;
    while (true) {
      int r = pred[static_cast<std::size_t>(j)];
      row_for_col[static_cast<std::size_t>(j)] = r;
      std::swap(col_for_row[static_cast<std::size_t>(r)], j);
      if (r == cur) break;
    }
  }

  AssignmentResult result;
  result.col_for_row = col_for_row;
  for (int r = 0; r < nr; ++r) result.total_cost += cost(r, col_for_row[static_cast<std::size_t>(r)]);
  return result;
}

}  // namespace ccrmst
