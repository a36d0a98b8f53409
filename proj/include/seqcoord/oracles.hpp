#pragma once

// Independent reference computations and seeded instance generators used by
// the acceptance suite and the tests. Oracles deliberately avoid the library
// code paths they check: plain loops over explicit trajectories, closed forms,
// and exhaustive scans.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "seqcoord/prob_core.hpp"
#include "seqcoord/rng.hpp"
#include "seqcoord/seminorms.hpp"
#include "seqcoord/tree_code.hpp"

namespace seqcoord::oracle {

// Probability vector on the 1/denominator grid with every entry at least
// floor/denominator.
Eigen::VectorXd grid_distribution(SplitMix64& rng, Index size, int denominator = 100, int floor = 0);
Eigen::MatrixXd grid_kernel(SplitMix64& rng, Index rows, Index cols, int denominator = 100, int floor = 0);
// General (Markov, history-dependent) source and policy with grid factors.
SourceLaw random_source(SplitMix64& rng, Index states, int horizon, int floor = 1);
DirectedKernel random_policy(SplitMix64& rng, Index states, Index actions, int horizon, int floor = 1);
// Integer in [lo, hi].
int uniform_int(SplitMix64& rng, int lo, int hi);

// sum_x sum_u mu(x) K(x,u) log(K(x,u) / sum_x' mu(x') K(x',u)).
double mutual_information_double_sum(const Eigen::VectorXd& mu, const Eigen::MatrixXd& k);

// Joint law over (x trajectory, u trajectory), computed trajectory by
// trajectory from the product of factors. Row: state trajectory code.
Eigen::MatrixXd product_formula_joint(const SourceLaw& source, const DirectedKernel& policy);

// I(X_[T]; U_[T]) from a joint table.
double joint_table_information(const Eigen::MatrixXd& joint);

// sum_t I(X_[t]; U_t | U_[t-1]) from the joint table by marginal entropies.
double directed_information_from_joint(const Eigen::MatrixXd& joint, Index states, Index actions, int horizon);

// sup over every threshold a of |P(c <= a) - Q(c <= a)|, scanning the cost
// values directly on the pair cells.
double ks_threshold_scan(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q, const Eigen::MatrixXd& cost);

// W1 on the real line: integral of |F_p - F_q| between sorted support points.
double w1_cdf_area(const Eigen::VectorXd& points, const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// |x - y| metric on the given points.
Eigen::MatrixXd line_metric(const Eigen::VectorXd& points);

// Greedy typicality scan written without the library's assignment loop.
SymbolBlock reference_assign(const SequentialCode& code, const SymbolBlock& x_block);

// Exact entropy of the output blocks, enumerating the source trajectories of
// every copy by nested index loops.
double enumerated_output_entropy(const SequentialCode& code, const SourceLaw& source);

}  // namespace seqcoord::oracle
