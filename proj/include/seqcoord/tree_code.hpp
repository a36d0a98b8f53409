#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "seqcoord/prob_core.hpp"
#include "seqcoord/seminorms.hpp"

namespace seqcoord {

// Symbols of a block: row t holds time t, column n holds copy n.
using SymbolBlock = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr Index kMaxBranches = 100'000;
inline constexpr Index kMaxMaterializedNodes = 1'000'000;
inline constexpr Index kMaxEnumeratedBlocks = 1'000'000;

// Rooted depth-T tree of action N-tuples. Node (i_1, ..., i_t), child indices
// counted from 1, holds an N-tuple whose copy n is drawn from
// nu_t(. | u_{[t-1], n}) given the ancestors' tuples. Every tuple is a pure
// function of (seed, path), so nodes are generated on demand and a
// materialized tree stores exactly the same tuples.
class TreeCodebook {
 public:
  TreeCodebook(std::vector<Eigen::MatrixXd> action_factors, int block, std::vector<Index> branch_counts,
               std::uint64_t seed);

  int horizon() const { return static_cast<int>(branch_counts_.size()); }
  int block() const { return block_; }
  Index actions() const { return action_factors_.front().cols(); }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Index>& branch_counts() const { return branch_counts_; }
  const std::vector<Eigen::MatrixXd>& action_factors() const { return action_factors_; }

  // Tuple of the node at `path`; `ancestors` holds the tuples of the proper
  // prefixes of `path` as its first path.size() - 1 rows.
  std::vector<int> tuple(std::span<const Index> path, const SymbolBlock& ancestors) const;
  // Tuples along the whole path, one row per depth.
  SymbolBlock path_tuples(std::span<const Index> path) const;
  // u_[N](0): the first action symbol repeated N times.
  std::vector<int> error_word() const { return std::vector<int>(static_cast<std::size_t>(block_), 0); }

  // Total number of non-root nodes, saturating at the Index maximum.
  Index node_count() const;
  // Stores every node; throws GuardError above kMaxMaterializedNodes.
  void materialize();
  bool materialized() const { return !stored_.empty(); }
  const std::map<std::vector<Index>, std::vector<int>>& stored() const { return stored_; }

 private:
  std::vector<int> generate(std::span<const Index> path, const SymbolBlock& ancestors) const;

  std::vector<Eigen::MatrixXd> action_factors_;
  int block_;
  std::vector<Index> branch_counts_;
  std::uint64_t seed_;
  std::map<std::vector<Index>, std::vector<int>> stored_;
};

// A_t membership: psi(x, u) = min(1, ||P_emp - reference||_F / 2) <= threshold.
struct TypicalSetSpec {
  int t = 0;
  double threshold = 0.0;
  FunctionClass fc;
  Eigen::MatrixXd reference;  // mu_t (x) pi_t as a |X| x |U| table
};

// Empirical law of the pairs (x_n, u_n) as a |X| x |U| table.
Eigen::MatrixXd empirical_pair_law(std::span<const int> x, std::span<const int> u, Index states, Index actions);

double psi(const TypicalSetSpec& spec, std::span<const int> x, std::span<const int> u);

struct CodeOutput {
  SymbolBlock actions;
  std::vector<Index> messages;  // chosen child per step, 0 once in the error state
};

struct SequentialCode {
  TreeCodebook codebook;
  std::vector<TypicalSetSpec> specs;
  Index states = 0;

  // Greedy: at each t the smallest-index child of the current node whose
  // tuple puts the pair block in A_t; otherwise the error word from then on.
  CodeOutput assign(const SymbolBlock& x_block) const;
};

// Materialized codebook for the action marginal of (source, policy).
TreeCodebook sample_codebook(const SourceLaw& source, const DirectedKernel& policy, int block,
                             const std::vector<Index>& branch_counts, std::uint64_t seed);

struct ParameterOptions {
  double epsilon = 0.1;
  FunctionClass fc = TotalVariation{};
  int reference_draws = 10'000;
  std::uint64_t seed = 0;
  Index branch_cap = kMaxBranches;
  // Clamp M_t at branch_cap instead of throwing GuardError.
  bool clamp = false;
};

struct CodeParameters {
  std::vector<Index> branch_counts;
  std::vector<double> thresholds;
  std::vector<double> per_step_rate;  // R_t of (source, policy)
  std::vector<double> delta_hat;      // Monte Carlo estimate of E psi
  std::vector<double> effective_epsilon;  // log(M_t) / N - R_t
  std::vector<bool> capped;
};

// M_t = ceil(exp(N (R_t + epsilon))), threshold_t = max(sqrt(delta_hat_t), 1e-6).
CodeParameters choose_parameters(const SourceLaw& source, const DirectedKernel& policy, int block,
                                 const ParameterOptions& opts);

// Tree code built from (source, policy) with lazily generated nodes.
SequentialCode build_code(const SourceLaw& source, const DirectedKernel& policy, int block,
                          const CodeParameters& params, const FunctionClass& fc, std::uint64_t seed);

struct ExactCodeReport {
  double entropy = 0.0;                  // H(U_[T],[N]) in nats
  double message_entropy = 0.0;          // H of the node path
  std::vector<double> message_step_entropy;  // H(I_t | I_[t-1])
  double distortion = 0.0;               // (1/T) sum_t E ||P_emp,t - target_t||_F
  double error_probability = 0.0;        // P(error word reached at some step)
};

// Full enumeration over the |X|^{TN} state blocks (guarded by
// kMaxEnumeratedBlocks). `target_pairs` are mu_t (x) pi_t of the target;
// leave it empty to skip the distortion.
ExactCodeReport evaluate_code_exact(const SequentialCode& code, const SourceLaw& source,
                                    const std::vector<Eigen::MatrixXd>& target_pairs, const FunctionClass& fc);
double exact_code_entropy(const SequentialCode& code, const SourceLaw& source);

struct TypicalityEstimate {
  double membership = 0.0;
  double standard_error = 0.0;
  double non_membership() const { return 1.0 - membership; }
};

// Fraction of i.i.d. state-action blocks whose per-time empirical pair law is
// strictly within delta of mu_t (x) pi_t in the F-seminorm at every t.
TypicalityEstimate typicality_probability(const SourceLaw& source, const DirectedKernel& policy,
                                          const FunctionClass& fc, double delta, int block, int trials,
                                          std::uint64_t seed);

// Draws one trajectory index of a law given by its cumulative sums.
Index draw_from_cdf(const Eigen::VectorXd& cdf, double u);

}  // namespace seqcoord
