#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "seqcoord/prob_core.hpp"

namespace seqcoord {

// { w : a_eq w = b_eq, g w <= h }.
struct Polyhedron {
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd g;
  Eigen::VectorXd h;

  Index dim() const { return std::max(a_eq.cols(), g.cols()); }
};

struct RelativeInterior {
  Eigen::VectorXd point;
  // Rows of g that hold with equality on the whole polyhedron.
  std::vector<bool> implicit;
};

// Point strictly inside every inequality that is not an implicit equality,
// found by repeated slack-maximizing LPs. Throws NumericError if empty.
RelativeInterior relative_interior(const Polyhedron& poly);

// Twice-differentiable convex function; `value` returns +inf off its domain.
struct SmoothConvex {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd& grad, Eigen::MatrixXd& hess)> derivatives;
};

struct BarrierOptions {
  double t0 = 1.0;
  double growth = 20.0;
  double gap_tol = 1e-11;
  double newton_tol = 1e-10;
  int max_iterations = 100000;
};

struct BarrierResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;  // Newton steps
  double gap = 0.0;    // barrier duality-gap bound m / t at exit
  bool converged = false;
};

// Log-barrier path following with Newton steps restricted to the null space
// of the equalities (implicit rows of g join them). `start` must satisfy the
// equalities and be strictly inside the remaining inequalities.
BarrierResult minimize_with_barrier(const Polyhedron& poly, const SmoothConvex& f, const Eigen::VectorXd& start,
                                    const std::vector<bool>& implicit, const BarrierOptions& opts = {});

}  // namespace seqcoord
