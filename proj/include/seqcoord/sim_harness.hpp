#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "seqcoord/rd_solver.hpp"
#include "seqcoord/rng.hpp"
#include "seqcoord/tree_code.hpp"

namespace seqcoord {

enum class EntropyMode { exact, plugin };

const char* mode_name(EntropyMode mode);

struct ExperimentConfig {
  RdInstance instance;
  std::vector<int> n_ladder;
  double epsilon = 0.1;
  int trials = 200;
  std::uint64_t seed = 0;
  EntropyMode entropy_mode = EntropyMode::plugin;
  int reference_draws = 10'000;
  Index branch_cap = kMaxBranches;
  bool clamp_branches = false;
  int threads = 1;  // 0 picks the hardware concurrency
};

// Ladder strictly increasing and positive, trials >= 1, epsilon > 0.
void validate(const ExperimentConfig& config);

struct BlockRecord {
  int block = 0;
  int trials = 0;
  double distortion_mean = 0.0;
  double distortion_se = 0.0;
  double entropy_norm = 0.0;  // H / (N T)
  EntropyMode entropy_mode = EntropyMode::plugin;
  // Plug-in mode: Miller-Madow correction (K - 1) / (2 trials N T) for K
  // distinct blocks seen. The plug-in value is biased low; this is only a
  // size indication, not a bound.
  double entropy_bias = 0.0;
  double rate_ref = 0.0;
  double entropy_cap = 0.0;  // sum_t log(M_t + 1) / (N T)
  double error_rate = 0.0;   // fraction of trials that hit the error word
  std::optional<double> distortion_exact;
  std::vector<double> step_entropy;  // exact mode: H(I_t | I_[t-1]) per step
  CodeParameters params;
};

struct ExperimentResult {
  double rate_ref = 0.0;
  DirectedKernel coding_policy;  // argmin of the rate problem, used to build codes
  std::vector<BlockRecord> records;
};

// Empirical law over pair cells x * |U| + u of the copies at time t.
Distribution empirical_distribution(const SymbolBlock& x_block, const SymbolBlock& u_block, int t, Index states,
                                    Index actions);

// Draws N i.i.d. state trajectories; column n is copy n.
SymbolBlock draw_state_block(const Eigen::VectorXd& trajectory_cdf, Index states, int horizon, int block,
                             SplitMix64& rng);

// (1/T) sum_t ||P_emp,t - target_t||_F.
double block_distortion(const SymbolBlock& x_block, const SymbolBlock& u_block,
                        const std::vector<Eigen::MatrixXd>& target_pairs, const FunctionClass& fc);

// Per ladder entry k, seeds split off stream_seed(seed, k): index 0 drives the
// reference draws, 1 the codebook, 2 the trial streams (trial i uses
// stream_seed(that, i)).
ExperimentResult run_experiment(const ExperimentConfig& config);

// The code behind record k, rebuilt from its parameters and seed.
SequentialCode code_for_record(const ExperimentConfig& config, const ExperimentResult& result, std::size_t k);

struct DistortionEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

// The policy itself run on i.i.d. blocks without any coding.
DistortionEstimate uncoded_distortion(const SourceLaw& source, const DirectedKernel& policy, const FunctionClass& fc,
                                      int block, int trials, std::uint64_t seed);

struct ConverseRow {
  int block = 0;
  double distortion_exact = 0.0;
  double entropy_norm = 0.0;
  double rate_at_distortion = 0.0;
  double margin = 0.0;  // entropy_norm - rate_at_distortion
  bool passed = false;
};

struct ConverseReport {
  std::vector<ConverseRow> rows;
  bool passed() const;
};

inline constexpr double kConverseTolerance = 1e-6;

// For every exact-mode record, the normalized entropy must reach the rate at
// the enumerated distortion (minus 1e-9 for the budget, 1e-6 for the solver).
ConverseReport converse_check(const ExperimentResult& result, const RdInstance& instance);
ConverseRow converse_row(int block, double entropy_norm, double distortion_exact, const RdInstance& instance);

struct CapRow {
  int block = 0;
  double entropy_norm = 0.0;
  double entropy_cap = 0.0;
  double rate_plus_epsilon = 0.0;  // (1/T) sum_t R_t + epsilon
  double rounding_slack = 0.0;     // (1/NT) sum_t log(1 + 2 exp(-N (R_t + epsilon)))
  bool entropy_within_cap = false;
  bool cap_within_slack = false;
};

// H/(NT) <= sum_t log(M_t + 1)/(NT), and that cap against (1/T) sum R_t + eps.
CapRow achievability_cap(const BlockRecord& record, double epsilon, int horizon);

}  // namespace seqcoord
