#include "seqcoord/tree_code.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "seqcoord/errors.hpp"
#include "seqcoord/rng.hpp"

namespace seqcoord {

namespace {

constexpr double kThresholdFloor = 1e-6;

Eigen::VectorXd cumulative(const Eigen::VectorXd& p) {
  Eigen::VectorXd c(p.size());
  double acc = 0.0;
  for (Index i = 0; i < p.size(); ++i) c[i] = (acc += p[i]);
  return c;
}

Eigen::VectorXd flat_pair(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v(m.size());
  for (Index x = 0; x < m.rows(); ++x) v.segment(x * m.cols(), m.cols()) = m.row(x).transpose();
  return v;
}

std::vector<int> row_of(const SymbolBlock& b, Index t) {
  std::vector<int> r(static_cast<std::size_t>(b.cols()));
  for (Index n = 0; n < b.cols(); ++n) r[static_cast<std::size_t>(n)] = b(t, n);
  return r;
}

double entropy_of(const std::map<std::vector<Index>, double>& law) {
  double h = 0.0;
  for (const auto& [k, p] : law) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace

Index draw_from_cdf(const Eigen::VectorXd& cdf, double u) {
  const double* begin = cdf.data();
  const double* end = begin + cdf.size();
  const double* it = std::upper_bound(begin, end, u);
  if (it != end) return it - begin;
  Index i = cdf.size() - 1;
  while (i > 0 && cdf[i] == cdf[i - 1]) --i;
  return i;
}

TreeCodebook::TreeCodebook(std::vector<Eigen::MatrixXd> action_factors, int block, std::vector<Index> branch_counts,
                           std::uint64_t seed)
    : action_factors_(std::move(action_factors)), block_(block), branch_counts_(std::move(branch_counts)), seed_(seed) {
  if (block_ < 1) throw std::invalid_argument("TreeCodebook: block size must be positive");
  if (branch_counts_.empty() || branch_counts_.size() != action_factors_.size()) {
    throw std::invalid_argument("TreeCodebook: need one branch count and one action factor per step");
  }
  for (Index m : branch_counts_) {
    if (m < 1) throw std::invalid_argument("TreeCodebook: branch counts must be positive");
  }
  const Index nu = action_factors_.front().cols();
  for (std::size_t t = 0; t < action_factors_.size(); ++t) {
    if (action_factors_[t].cols() != nu || action_factors_[t].rows() != checked_pow(nu, static_cast<int>(t))) {
      throw std::invalid_argument("TreeCodebook: action factor has wrong shape");
    }
  }
}

std::vector<int> TreeCodebook::generate(std::span<const Index> path, const SymbolBlock& ancestors) const {
  const int depth = static_cast<int>(path.size());
  const Eigen::MatrixXd& factor = action_factors_[static_cast<std::size_t>(depth - 1)];
  const Index nu = actions();
  std::uint64_t key = mix64(seed_ ^ 0x6a09e667f3bcc909ULL);
  key = mix64(key + static_cast<std::uint64_t>(depth));
  for (Index e : path) key = mix64(key ^ (static_cast<std::uint64_t>(e) * kGolden));
  std::vector<int> out(static_cast<std::size_t>(block_));
  for (int n = 0; n < block_; ++n) {
    Index hist = 0;
    for (int s = 0; s + 1 < depth; ++s) hist = hist * nu + ancestors(s, n);
    const double u = unit_interval(mix64(key + kGolden * static_cast<std::uint64_t>(n + 1)));
    out[static_cast<std::size_t>(n)] = sample_index(factor.row(hist), u);
  }
  return out;
}

std::vector<int> TreeCodebook::tuple(std::span<const Index> path, const SymbolBlock& ancestors) const {
  if (path.empty() || static_cast<int>(path.size()) > horizon()) throw std::invalid_argument("TreeCodebook: bad path depth");
  for (std::size_t s = 0; s < path.size(); ++s) {
    if (path[s] < 1 || path[s] > branch_counts_[s]) throw std::out_of_range("TreeCodebook: child index out of range");
  }
  if (!stored_.empty()) return stored_.at(std::vector<Index>(path.begin(), path.end()));
  return generate(path, ancestors);
}

SymbolBlock TreeCodebook::path_tuples(std::span<const Index> path) const {
  SymbolBlock out = SymbolBlock::Zero(static_cast<Index>(path.size()), block_);
  for (std::size_t s = 0; s < path.size(); ++s) {
    const auto tup = tuple(path.first(s + 1), out);
    for (int n = 0; n < block_; ++n) out(static_cast<Index>(s), n) = tup[static_cast<std::size_t>(n)];
  }
  return out;
}

Index TreeCodebook::node_count() const {
  const Index cap = std::numeric_limits<Index>::max();
  Index level = 1, total = 0;
  for (Index m : branch_counts_) {
    level = level > cap / m ? cap : level * m;
    total = total > cap - level ? cap : total + level;
  }
  return total;
}

void TreeCodebook::materialize() {
  if (materialized()) return;
  const Index nodes = node_count();
  if (nodes > kMaxMaterializedNodes) {
    throw GuardError("codebook has " + std::to_string(nodes) + " nodes; limit is " + std::to_string(kMaxMaterializedNodes));
  }
  std::map<std::vector<Index>, std::vector<int>> all;
  std::vector<Index> path;
  SymbolBlock anc = SymbolBlock::Zero(horizon(), block_);
  auto walk = [&](auto&& self) -> void {
    const int depth = static_cast<int>(path.size());
    if (depth == horizon()) return;
    for (Index j = 1; j <= branch_counts_[static_cast<std::size_t>(depth)]; ++j) {
      path.push_back(j);
      auto tup = generate(path, anc);
      for (int n = 0; n < block_; ++n) anc(depth, n) = tup[static_cast<std::size_t>(n)];
      all.emplace(path, std::move(tup));
      self(self);
      path.pop_back();
    }
  };
  walk(walk);
  stored_ = std::move(all);
}

Eigen::MatrixXd empirical_pair_law(std::span<const int> x, std::span<const int> u, Index states, Index actions) {
  if (x.size() != u.size() || x.empty()) throw std::invalid_argument("empirical_pair_law: shape mismatch");
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(states, actions);
  for (std::size_t n = 0; n < x.size(); ++n) {
    if (x[n] < 0 || x[n] >= states || u[n] < 0 || u[n] >= actions) throw std::out_of_range("empirical_pair_law: symbol out of range");
    p(x[n], u[n]) += 1.0;
  }
  return p / static_cast<double>(x.size());
}

double psi(const TypicalSetSpec& spec, std::span<const int> x, std::span<const int> u) {
  const Eigen::MatrixXd emp = empirical_pair_law(x, u, spec.reference.rows(), spec.reference.cols());
  return std::min(1.0, 0.5 * seminorm(SignedMeasureView(emp - spec.reference), spec.fc));
}

CodeOutput SequentialCode::assign(const SymbolBlock& x_block) const {
  const int horizon = codebook.horizon();
  const int block = codebook.block();
  if (x_block.rows() != horizon || x_block.cols() != block) throw std::invalid_argument("assign: state block has wrong shape");
  if (static_cast<int>(specs.size()) != horizon) throw std::invalid_argument("assign: one typical-set spec per step");
  CodeOutput out;
  out.actions = SymbolBlock::Zero(horizon, block);
  out.messages.assign(static_cast<std::size_t>(horizon), 0);
  SymbolBlock anc = SymbolBlock::Zero(horizon, block);
  std::vector<Index> path;
  bool failed = false;
  for (int t = 0; t < horizon && !failed; ++t) {
    const auto x = row_of(x_block, t);
    const TypicalSetSpec& spec = specs[static_cast<std::size_t>(t)];
    bool found = false;
    for (Index j = 1; j <= codebook.branch_counts()[static_cast<std::size_t>(t)]; ++j) {
      path.push_back(j);
      const auto tup = codebook.tuple(path, anc);
      if (psi(spec, x, tup) <= spec.threshold) {
        for (int n = 0; n < block; ++n) anc(t, n) = tup[static_cast<std::size_t>(n)];
        out.messages[static_cast<std::size_t>(t)] = j;
        found = true;
        break;
      }
      path.pop_back();
    }
    if (!found) {
      failed = true;
      break;
    }
    out.actions.row(t) = anc.row(t);
  }
  // Rows after a failure keep the error word (all zeros).
  return out;
}

TreeCodebook sample_codebook(const SourceLaw& source, const DirectedKernel& policy, int block,
                             const std::vector<Index>& branch_counts, std::uint64_t seed) {
  TreeCodebook book(action_factors(assemble_strategic_measure(source, policy)), block, branch_counts, seed);
  book.materialize();
  return book;
}

CodeParameters choose_parameters(const SourceLaw& source, const DirectedKernel& policy, int block,
                                 const ParameterOptions& opts) {
  if (!(opts.epsilon > 0.0)) throw std::invalid_argument("choose_parameters: epsilon must be positive");
  if (block < 1) throw std::invalid_argument("choose_parameters: block size must be positive");
  if (opts.branch_cap < 1) throw std::invalid_argument("choose_parameters: branch cap must be positive");
  const int horizon = source.horizon();
  const StrategicMeasure measure = assemble_strategic_measure(source, policy);
  validate(opts.fc, measure.states(), measure.actions());
  const DirectedInformation di = directed_information(source, policy);
  CodeParameters out;
  out.per_step_rate = di.per_step;
  for (int t = 0; t < horizon; ++t) {
    const double r = std::max(0.0, di.per_step[static_cast<std::size_t>(t)]);
    const double exponent = block * (r + opts.epsilon);
    Index m = opts.branch_cap;
    bool capped = false;
    if (exponent <= std::log(static_cast<double>(opts.branch_cap))) {
      m = std::max<Index>(1, static_cast<Index>(std::ceil(std::exp(exponent) * (1.0 - 1e-12))));
      m = std::min(m, opts.branch_cap);
    } else if (opts.clamp) {
      capped = true;
    } else {
      throw GuardError("M_" + std::to_string(t) + " = exp(" + std::to_string(exponent) + ") exceeds the branch cap " +
                       std::to_string(opts.branch_cap));
    }
    out.branch_counts.push_back(m);
    out.capped.push_back(capped);
    out.effective_epsilon.push_back(std::log(static_cast<double>(m)) / block - r);

    // delta_hat: mean psi over i.i.d. reference blocks.
    TypicalSetSpec spec{t, 0.0, opts.fc, pair_marginal(measure, t)};
    const Eigen::VectorXd cdf = cumulative(flat_pair(spec.reference));
    const Index nu = measure.actions();
    SplitMix64 rng(stream_seed(opts.seed, static_cast<std::uint64_t>(t)));
    std::vector<int> xs(static_cast<std::size_t>(block)), us(static_cast<std::size_t>(block));
    double sum = 0.0;
    for (int d = 0; d < opts.reference_draws; ++d) {
      for (int n = 0; n < block; ++n) {
        const Index cell = draw_from_cdf(cdf, rng.uniform());
        xs[static_cast<std::size_t>(n)] = static_cast<int>(cell / nu);
        us[static_cast<std::size_t>(n)] = static_cast<int>(cell % nu);
      }
      sum += psi(spec, xs, us);
    }
    const double dh = opts.reference_draws > 0 ? sum / opts.reference_draws : 0.0;
    out.delta_hat.push_back(dh);
    out.thresholds.push_back(std::max(std::sqrt(dh), kThresholdFloor));
  }
  return out;
}

SequentialCode build_code(const SourceLaw& source, const DirectedKernel& policy, int block,
                          const CodeParameters& params, const FunctionClass& fc, std::uint64_t seed) {
  const StrategicMeasure measure = assemble_strategic_measure(source, policy);
  std::vector<TypicalSetSpec> specs;
  for (int t = 0; t < measure.horizon(); ++t) {
    specs.push_back(TypicalSetSpec{t, params.thresholds.at(static_cast<std::size_t>(t)), fc, pair_marginal(measure, t)});
  }
  return SequentialCode{TreeCodebook(action_factors(measure), block, params.branch_counts, seed), std::move(specs),
                        measure.states()};
}

ExactCodeReport evaluate_code_exact(const SequentialCode& code, const SourceLaw& source,
                                    const std::vector<Eigen::MatrixXd>& target_pairs, const FunctionClass& fc) {
  const int horizon = code.codebook.horizon();
  const int block = code.codebook.block();
  const Index nx = source.states();
  const Index traj = checked_pow(nx, horizon);
  const Index blocks = checked_pow(nx, horizon * block);
  if (blocks > kMaxEnumeratedBlocks) {
    throw GuardError("exact evaluation needs " + std::to_string(blocks) + " state blocks; limit is " +
                     std::to_string(kMaxEnumeratedBlocks));
  }
  const bool with_distortion = !target_pairs.empty();
  if (with_distortion && static_cast<int>(target_pairs.size()) != horizon) {
    throw std::invalid_argument("evaluate_code_exact: need one target per step");
  }
  const Eigen::VectorXd p = state_law(source).probs();
  const std::vector<int> radices(static_cast<std::size_t>(horizon), static_cast<int>(nx));
  std::vector<int> digits(radices.size());

  std::map<std::vector<Index>, double> action_law;
  std::vector<std::map<std::vector<Index>, double>> prefix_law(static_cast<std::size_t>(horizon));
  ExactCodeReport rep;
  SymbolBlock x(horizon, block);
  std::vector<Index> key;
  for (Index b = 0; b < blocks; ++b) {
    double prob = 1.0;
    Index code_b = b;
    for (int n = block; n-- > 0;) {
      const Index r = code_b % traj;
      code_b /= traj;
      prob *= p[r];
      decode_digits(r, radices, digits);
      for (int t = 0; t < horizon; ++t) x(t, n) = digits[static_cast<std::size_t>(t)];
    }
    if (prob == 0.0) continue;
    const CodeOutput out = code.assign(x);
    key.assign(out.actions.data(), out.actions.data() + out.actions.size());
    action_law[key] += prob;
    for (int t = 0; t < horizon; ++t) {
      std::vector<Index> prefix(out.messages.begin(), out.messages.begin() + t + 1);
      prefix_law[static_cast<std::size_t>(t)][prefix] += prob;
    }
    if (std::find(out.messages.begin(), out.messages.end(), Index{0}) != out.messages.end()) rep.error_probability += prob;
    if (!with_distortion) continue;
    double dist = 0.0;
    for (int t = 0; t < horizon; ++t) {
      const auto xs = row_of(x, t);
      const auto us = row_of(out.actions, t);
      const Eigen::MatrixXd emp = empirical_pair_law(xs, us, nx, target_pairs[static_cast<std::size_t>(t)].cols());
      dist += seminorm(SignedMeasureView(emp - target_pairs[static_cast<std::size_t>(t)]), fc);
    }
    rep.distortion += prob * dist / horizon;
  }
  rep.entropy = entropy_of(action_law);
  double prev = 0.0;
  for (int t = 0; t < horizon; ++t) {
    const double h = entropy_of(prefix_law[static_cast<std::size_t>(t)]);
    rep.message_step_entropy.push_back(std::max(0.0, h - prev));
    prev = h;
  }
  rep.message_entropy = prev;
  return rep;
}

double exact_code_entropy(const SequentialCode& code, const SourceLaw& source) {
  return evaluate_code_exact(code, source, {}, TotalVariation{}).entropy;
}

TypicalityEstimate typicality_probability(const SourceLaw& source, const DirectedKernel& policy,
                                          const FunctionClass& fc, double delta, int block, int trials,
                                          std::uint64_t seed) {
  if (trials < 1 || block < 1) throw std::invalid_argument("typicality_probability: trials and block must be positive");
  const StrategicMeasure measure = assemble_strategic_measure(source, policy);
  validate(fc, measure.states(), measure.actions());
  const int horizon = measure.horizon();
  const Index nx = measure.states();
  const Index nu = measure.actions();
  std::vector<Eigen::MatrixXd> refs;
  for (int t = 0; t < horizon; ++t) refs.push_back(pair_marginal(measure, t));
  const Eigen::VectorXd cdf = cumulative(measure.joint());
  std::vector<int> radices(static_cast<std::size_t>(2 * horizon));
  std::fill(radices.begin(), radices.begin() + horizon, static_cast<int>(nx));
  std::fill(radices.begin() + horizon, radices.end(), static_cast<int>(nu));
  std::vector<int> digits(radices.size());

  Index members = 0;
  std::vector<Eigen::MatrixXd> counts(static_cast<std::size_t>(horizon));
  for (int trial = 0; trial < trials; ++trial) {
    SplitMix64 rng(stream_seed(seed, static_cast<std::uint64_t>(trial)));
    for (auto& c : counts) c = Eigen::MatrixXd::Zero(nx, nu);
    for (int n = 0; n < block; ++n) {
      decode_digits(draw_from_cdf(cdf, rng.uniform()), radices, digits);
      for (int t = 0; t < horizon; ++t) {
        counts[static_cast<std::size_t>(t)](digits[static_cast<std::size_t>(t)], digits[static_cast<std::size_t>(horizon + t)]) += 1.0;
      }
    }
    bool inside = true;
    for (int t = 0; t < horizon && inside; ++t) {
      const Eigen::MatrixXd emp = counts[static_cast<std::size_t>(t)] / static_cast<double>(block);
      inside = seminorm(SignedMeasureView(emp - refs[static_cast<std::size_t>(t)]), fc) < delta;
    }
    members += inside ? 1 : 0;
  }
  TypicalityEstimate est;
  est.membership = static_cast<double>(members) / trials;
  est.standard_error = std::sqrt(est.membership * (1.0 - est.membership) / trials);
  return est;
}

}  // namespace seqcoord
