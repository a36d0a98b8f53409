#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace seqcoord {

using Index = Eigen::Index;

inline constexpr double kStochasticTol = 1e-12;
inline constexpr double kCausalityTol = 1e-10;

// Integer power for table sizes; throws GuardError past 2^62.
Index checked_pow(Index base, int exponent);

// Mixed-radix flattening, most significant digit first. A configuration
// (x_0, ..., x_{t}, u_0, ..., u_{t-1}) is stored as the digit sequence in
// that order: states before actions, earlier times before later ones.
Index encode_digits(std::span<const int> digits, std::span<const int> radices);
void decode_digits(Index code, std::span<const int> radices, std::span<int> digits);

class Alphabet {
 public:
  explicit Alphabet(std::vector<std::string> labels);
  static Alphabet indexed(Index size);

  Index size() const { return static_cast<Index>(labels_.size()); }
  const std::string& label(Index i) const { return labels_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::string>& labels() const { return labels_; }
  // -1 when absent.
  Index index_of(const std::string& label) const;

  bool operator==(const Alphabet&) const = default;

 private:
  std::vector<std::string> labels_;
};

// Probability vector over a finite alphabet.
class Distribution {
 public:
  explicit Distribution(Eigen::VectorXd probs);
  static Distribution uniform(Index size);
  static Distribution point_mass(Index size, Index at);

  const Eigen::VectorXd& probs() const { return probs_; }
  Index size() const { return probs_.size(); }
  double operator[](Index i) const { return probs_[i]; }

 private:
  Eigen::VectorXd probs_;
};

// Row-stochastic matrix: rows are input configurations, columns outputs.
class MarkovKernel {
 public:
  explicit MarkovKernel(Eigen::MatrixXd rows);
  static MarkovKernel identity(Index size);
  static MarkovKernel constant(const Distribution& row, Index inputs);

  const Eigen::MatrixXd& matrix() const { return rows_; }
  Index inputs() const { return rows_.rows(); }
  Index outputs() const { return rows_.cols(); }
  double operator()(Index in, Index out) const { return rows_(in, out); }

 private:
  Eigen::MatrixXd rows_;
};

// Law of X_0..X_{T-1}; factor t conditions on x_{0..t-1} (|X|^t rows).
class SourceLaw {
 public:
  SourceLaw(Index states, std::vector<MarkovKernel> factors);
  // Memoryless source with the same marginal at every step.
  static SourceLaw iid(const Distribution& marginal, int horizon);

  int horizon() const { return static_cast<int>(factors_.size()); }
  Index states() const { return states_; }
  const MarkovKernel& factor(int t) const { return factors_.at(static_cast<std::size_t>(t)); }
  const std::vector<MarkovKernel>& factors() const { return factors_; }

 private:
  Index states_;
  std::vector<MarkovKernel> factors_;
};

// Causal policy; factor t conditions on (x_{0..t}, u_{0..t-1}), i.e. it has
// |X|^{t+1} |U|^t rows in the mixed-radix order of encode_digits.
class DirectedKernel {
 public:
  DirectedKernel(Index states, Index actions, std::vector<MarkovKernel> factors);
  // u_t drawn from `k(.|x_t)` at every step.
  static DirectedKernel memoryless(const MarkovKernel& k, int horizon);

  int horizon() const { return static_cast<int>(factors_.size()); }
  Index states() const { return states_; }
  Index actions() const { return actions_; }
  const MarkovKernel& factor(int t) const { return factors_.at(static_cast<std::size_t>(t)); }
  const std::vector<MarkovKernel>& factors() const { return factors_; }

 private:
  Index states_;
  Index actions_;
  std::vector<MarkovKernel> factors_;
};

// Dense joint law over X^T x U^T, flattened as (x_0..x_{T-1}, u_0..u_{T-1}).
class StrategicMeasure {
 public:
  // Validates normalization and the causality invariant.
  StrategicMeasure(Index states, Index actions, int horizon, Eigen::VectorXd joint);

  Index states() const { return states_; }
  Index actions() const { return actions_; }
  int horizon() const { return horizon_; }
  const Eigen::VectorXd& joint() const { return joint_; }
  Index state_configs() const { return state_configs_; }
  Index action_configs() const { return action_configs_; }
  // joint(x_{[T]}, u_{[T]}) with both trajectories already flattened.
  double at(Index state_traj, Index action_traj) const {
    return joint_[state_traj * action_configs_ + action_traj];
  }
  // Joint as a |X|^T x |U|^T matrix (row: state trajectory).
  Eigen::MatrixXd as_matrix() const;

 private:
  Index states_;
  Index actions_;
  int horizon_;
  Index state_configs_;
  Index action_configs_;
  Eigen::VectorXd joint_;
};

// Largest deviation from the causality invariant: for every t the law of
// u_{[t]} given x_{[T]} must not depend on x_{t+1..T-1}.
double causality_violation(Index states, Index actions, int horizon, const Eigen::MatrixXd& joint_by_state);

struct DirectedInformation {
  double total = 0.0;
  std::vector<double> per_step;
};

// Conditional information density i_t over N i.i.d. copies. Cells are
// indexed by N single-copy configurations (x_{0..t}, u_{0..t}), copy 0 most
// significant. Cells of probability zero carry value 0.
struct InfoDensityTable {
  int time = 0;
  int block = 1;
  Eigen::VectorXd single_values;
  Eigen::VectorXd single_probs;
  Eigen::VectorXd values;
  Eigen::VectorXd probs;

  double expectation() const { return probs.dot(values); }
};

inline constexpr Index kInfoDensityCellLimit = 10'000'000;

// -sum p log p with 0 log 0 = 0, in nats.
template <typename Derived>
double entropy(const Eigen::MatrixBase<Derived>& p) {
  double h = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    const double v = p.derived().coeff(i);
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

// D(p || q); +infinity when p is not absolutely continuous w.r.t. q.
template <typename DerivedP, typename DerivedQ>
double kl_divergence(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q) {
  double d = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    const double pi = p.derived().coeff(i);
    if (pi <= 0.0) continue;
    const double qi = q.derived().coeff(i);
    if (qi <= 0.0) return std::numeric_limits<double>::infinity();
    d += pi * std::log(pi / qi);
  }
  return d;
}

// I(p, K) = D(p (x) K || p (x) pK) for an input law p and channel matrix K.
template <typename DerivedP, typename DerivedK>
double mutual_information(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedK>& k) {
  const Eigen::RowVectorXd out = p.transpose() * k;
  double info = 0.0;
  for (Index x = 0; x < k.rows(); ++x) {
    const double px = p.derived().coeff(x);
    if (px <= 0.0) continue;
    for (Index u = 0; u < k.cols(); ++u) {
      const double kxu = k.derived().coeff(x, u);
      if (kxu > 0.0) info += px * kxu * std::log(kxu / out[u]);
    }
  }
  return info;
}

double exact_entropy(const Distribution& dist);
double mutual_information(const Distribution& mu, const MarkovKernel& k);

StrategicMeasure assemble_strategic_measure(const SourceLaw& source, const DirectedKernel& policy);

// Law of X_t under the measure.
Distribution marginal_state(const StrategicMeasure& measure, int t);
// Law of U_t given X_t; rows with zero state probability are uniform.
MarkovKernel marginal_policy(const StrategicMeasure& measure, int t);
// Law of (X_t, U_t) as a |X| x |U| matrix, i.e. mu_t (x) pi_t.
Eigen::MatrixXd pair_marginal(const StrategicMeasure& measure, int t);

// I(X_{[T]}; U_{[T]}) computed from the full joint tensor.
double joint_mutual_information(const StrategicMeasure& measure);

// Per-step I(X_{[t]}; U_t | U_{[t-1]}) by forward recursion over prefixes.
DirectedInformation directed_information(const SourceLaw& source, const DirectedKernel& policy);

InfoDensityTable info_density(const SourceLaw& source, const DirectedKernel& policy, int t, int block);

// Law of the whole state trajectory as a vector over |X|^T configurations.
Distribution state_law(const SourceLaw& source);

// P(u_{[T]} | x_{[T]}) as a |X|^T x |U|^T kernel.
MarkovKernel joint_conditional(const DirectedKernel& policy);

// Inverse of joint_conditional for causal inputs: recovers the factors by
// conditioning. Histories of zero probability get uniform rows.
DirectedKernel disintegrate(const Eigen::MatrixXd& joint_conditional, Index states, Index actions, int horizon);

// Factors nu_t(u_t | u_{[t-1]}) of the action marginal (|U|^t rows each).
std::vector<Eigen::MatrixXd> action_factors(const StrategicMeasure& measure);

// Rows summing to zero mass become uniform; others are normalized.
Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& m);

}  // namespace seqcoord
