#pragma once

#include <Eigen/Dense>
#include <string>

#include "seqcoord/barrier.hpp"
#include "seqcoord/prob_core.hpp"
#include "seqcoord/seminorms.hpp"

namespace seqcoord {

struct RdInstance {
  SourceLaw source;
  DirectedKernel target_policy;
  FunctionClass fc;
  double delta = 0.0;
};

// Shapes, horizons, function class and delta >= 0.
void validate(const RdInstance& instance);

struct SolverReport {
  int iterations = 0;
  double residual = 0.0;  // barrier duality-gap bound at exit
  bool converged = false;
  std::string method;
};

struct RdSolution {
  double rate = 0.0;  // nats per time step
  DirectedKernel argmin_policy;
  double achieved_constraint = 0.0;
  SolverReport report;
};

// (1/T) sum_t ||mu_t (x) candidate_t - mu_t (x) target_t||_F.
double feasibility_gap(const RdInstance& instance, const DirectedKernel& candidate);

// Largest problem solve_rate accepts, in optimization variables.
inline constexpr Index kMaxRdVariables = 6000;

// Minimizes (1/T) I(X_[T]; U_[T]) over causal joint conditionals that meet
// the averaged seminorm budget. The joint conditional is the variable;
// causality and the seminorm epigraph are linear constraints, and the convex
// program is solved by a log-barrier method.
RdSolution solve_rate(const RdInstance& instance, const BarrierOptions& opts = {});

struct BruteforceResult {
  double rate = 0.0;
  // Largest objective change between feasible grid neighbours (one row moved
  // by one grid step); bounds how far the grid minimum can sit above the
  // continuous one.
  double modulus = 0.0;
  DirectedKernel argmin_policy;
  Index grid_points = 0;
  Index feasible_points = 0;
};

inline constexpr Index kBruteforceGridLimit = 10'000'000;

// Exhaustive search over policies whose rows all lie on the simplex grid of
// the given step. Ties resolve to the lexicographically smallest kernel.
BruteforceResult solve_rate_bruteforce(const RdInstance& instance, double grid_step);

// sup_x |f(x,u) - f(x,u')| <= d(u,u') for every f in the class, checked on
// point-mass differences.
bool satisfies_uniform_lipschitz(const FunctionClass& fc, Index states, Index actions,
                                 const Eigen::MatrixXd& action_metric);

// inf I(X; U_hat) over test channels W(u_hat | u) with E d(U, U_hat) <= delta,
// where X ~ mu and U ~ policy(.|X).
double kop_bound(const Distribution& mu, const MarkovKernel& policy, const Eigen::MatrixXd& action_metric, double delta,
                 const BarrierOptions& opts = {});

double awgn_capacity_avg(double s);

struct PeakGrid {
  int input_points = 41;
  int output_bins = 2000;
  double tail_width = 10.0;  // in noise standard deviations beyond sqrt(s)
  double tolerance = 1e-9;
  int max_iterations = 5000;
};

struct PeakCapacity {
  double value = 0.0;      // I of the optimized grid input through the binned channel
  double ba_gap = 0.0;     // Blahut-Arimoto upper minus lower bound
  double bin_error = 0.0;  // change when the output bins are halved
  int iterations = 0;
};

// Lower bound on the AWGN capacity under |X| <= 1, gain sqrt(s), unit noise.
PeakCapacity awgn_capacity_peak(double s, const PeakGrid& grid = {});

}  // namespace seqcoord
