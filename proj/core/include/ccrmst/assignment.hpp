#pragma once

#include <vector>

#include <Eigen/Dense>

namespace ccrmst {

struct AssignmentResult {
  std::vector<int> col_for_row;  // one column per row, all distinct
  double total_cost = 0.0;
};

// Exact minimum-cost solution of the rectangular assignment problem
// (rows <= cols, every row assigned) by shortest augmenting paths on the
// reduced-cost graph with dual potentials. Deterministic: ties resolve by
// the lowest column index. Throws if rows > cols or any cost is not finite.
AssignmentResult solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace ccrmst
