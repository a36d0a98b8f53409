#pragma once

#include <Eigen/Dense>
#include <vector>

namespace seqcoord {

// minimize cost.x  s.t.  a_ub x <= b_ub,  a_eq x = b_eq,  x >= 0 except
// where `free_vars[j]` is set. Empty constraint blocks are allowed.
struct LinearProgram {
  Eigen::VectorXd cost;
  Eigen::MatrixXd a_ub;
  Eigen::VectorXd b_ub;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
  std::vector<bool> free_vars;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
  LpStatus status = LpStatus::iteration_limit;
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
};

// Dense two-phase tableau simplex; Dantzig pricing with a Bland fallback
// after a run of degenerate pivots.
LpResult solve_lp(const LinearProgram& lp, int max_iterations = 200000);

}  // namespace seqcoord
