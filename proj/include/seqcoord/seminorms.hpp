#pragma once

#include <Eigen/Dense>
#include <variant>
#include <vector>

#include "seqcoord/prob_core.hpp"

namespace seqcoord {

// Test-function families over pair cells (x, u). Pair matrices are |X| x |U|;
// metrics act on the flattened cells, index x * |U| + u.
struct TotalVariation {};

struct FiniteTable {
  std::vector<Eigen::MatrixXd> functions;  // entries in [-1, 1]
};

// Indicators 1{c(x,u) <= a} over all real thresholds a.
struct CostLevelSets {
  Eigen::MatrixXd cost;
};

// Unit ball of ||f||_inf + ||f||_Lip for the given metric.
struct BoundedLipschitz {
  Eigen::MatrixXd metric;
};

using FunctionClass = std::variant<TotalVariation, FiniteTable, CostLevelSets, BoundedLipschitz>;

const char* kind_name(const FunctionClass& fc);

// Throws std::invalid_argument when the class does not fit |X| x |U| cells or
// violates its own invariants.
void validate(const FunctionClass& fc, Index states, Index actions);

// Symmetric, zero diagonal, positive off-diagonal, triangle inequality to 1e-12.
void validate_metric(const Eigen::MatrixXd& metric);
Eigen::MatrixXd discrete_metric(Index cells);

// Difference of two probability tables on the same pair cells.
class SignedMeasureView {
 public:
  explicit SignedMeasureView(Eigen::MatrixXd delta);
  static SignedMeasureView difference(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q);

  const Eigen::MatrixXd& delta() const { return delta_; }
  // Row-major flattening x * |U| + u.
  Eigen::VectorXd flat() const;

 private:
  Eigen::MatrixXd delta_;
};

// TV uses the factor-2 convention, i.e. the l1 norm of the difference.
double seminorm(const SignedMeasureView& delta, const FunctionClass& fc);
double seminorm(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q, const FunctionClass& fc);

// Law of c(X, U) on its sorted distinct values (ties within 1e-12 merged).
struct CostPushforward {
  Eigen::VectorXd grid;
  Eigen::VectorXd probs;
};
CostPushforward pushforward(const Eigen::MatrixXd& pair_law, const Eigen::MatrixXd& cost);

// sup_a |F_P(a) - F_Q(a)| for laws on a shared strictly increasing grid.
double ks_distance(const Eigen::VectorXd& grid, const Distribution& p, const Distribution& q);

// Optimal transport cost; primal coupling LP checked against the potential LP.
double wasserstein1(const Distribution& p, const Distribution& q, const Eigen::MatrixXd& metric);

// sup <p - q, f> over ||f||_inf + ||f||_Lip <= 1; primal and dual LPs are
// both solved and must agree to 1e-9.
double bounded_lipschitz(const Distribution& p, const Distribution& q, const Eigen::MatrixXd& metric);
double bounded_lipschitz(const Eigen::VectorXd& delta, const Eigen::MatrixXd& metric);

}  // namespace seqcoord
