#include "seqcoord/sim_harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

#include "seqcoord/rng.hpp"

namespace seqcoord {

namespace {

Eigen::VectorXd cumulative(const Eigen::VectorXd& p) {
  Eigen::VectorXd c(p.size());
  double acc = 0.0;
  for (Index i = 0; i < p.size(); ++i) c[i] = (acc += p[i]);
  return c;
}

std::vector<Eigen::MatrixXd> pair_targets(const SourceLaw& source, const DirectedKernel& policy) {
  const StrategicMeasure m = assemble_strategic_measure(source, policy);
  std::vector<Eigen::MatrixXd> out;
  for (int t = 0; t < m.horizon(); ++t) out.push_back(pair_marginal(m, t));
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index
// writes only its own slot, so the schedule never affects results.
template <typename Body>
void parallel_for(int count, int threads, Body body) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < count; i += threads) body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

const char* mode_name(EntropyMode mode) { return mode == EntropyMode::exact ? "exact" : "plugin"; }

void validate(const ExperimentConfig& config) {
  validate(config.instance);
  if (config.n_ladder.empty()) throw std::invalid_argument("experiment: N ladder is empty");
  for (std::size_t i = 0; i < config.n_ladder.size(); ++i) {
    if (config.n_ladder[i] < 1) throw std::invalid_argument("experiment: block sizes must be positive");
    if (i > 0 && config.n_ladder[i] <= config.n_ladder[i - 1]) {
      throw std::invalid_argument("experiment: N ladder must be strictly increasing");
    }
  }
  if (config.trials < 1) throw std::invalid_argument("experiment: trials must be at least 1");
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("experiment: epsilon must be positive");
  if (config.reference_draws < 1) throw std::invalid_argument("experiment: reference_draws must be at least 1");
  if (config.branch_cap < 1) throw std::invalid_argument("experiment: branch_cap must be positive");
  if (config.threads < 0) throw std::invalid_argument("experiment: threads must be >= 0");
}

Distribution empirical_distribution(const SymbolBlock& x_block, const SymbolBlock& u_block, int t, Index states,
                                    Index actions) {
  if (x_block.rows() != u_block.rows() || x_block.cols() != u_block.cols() || x_block.cols() < 1) {
    throw std::invalid_argument("empirical_distribution: state and action blocks differ in shape");
  }
  if (t < 0 || t >= x_block.rows()) throw std::out_of_range("empirical_distribution: time out of range");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(states * actions);
  for (Index n = 0; n < x_block.cols(); ++n) {
    const int x = x_block(t, n), u = u_block(t, n);
    if (x < 0 || x >= states || u < 0 || u >= actions) throw std::out_of_range("empirical_distribution: symbol out of range");
    counts[x * actions + u] += 1.0;
  }
  return Distribution(counts / static_cast<double>(x_block.cols()));
}

SymbolBlock draw_state_block(const Eigen::VectorXd& trajectory_cdf, Index states, int horizon, int block,
                             SplitMix64& rng) {
  SymbolBlock x(horizon, block);
  const std::vector<int> radices(static_cast<std::size_t>(horizon), static_cast<int>(states));
  std::vector<int> digits(radices.size());
  for (int n = 0; n < block; ++n) {
    decode_digits(draw_from_cdf(trajectory_cdf, rng.uniform()), radices, digits);
    for (int t = 0; t < horizon; ++t) x(t, n) = digits[static_cast<std::size_t>(t)];
  }
  return x;
}

double block_distortion(const SymbolBlock& x_block, const SymbolBlock& u_block,
                        const std::vector<Eigen::MatrixXd>& target_pairs, const FunctionClass& fc) {
  const int horizon = static_cast<int>(x_block.rows());
  if (static_cast<int>(target_pairs.size()) != horizon) throw std::invalid_argument("block_distortion: one target per step");
  double total = 0.0;
  for (int t = 0; t < horizon; ++t) {
    const Eigen::MatrixXd& target = target_pairs[static_cast<std::size_t>(t)];
    const Distribution emp = empirical_distribution(x_block, u_block, t, target.rows(), target.cols());
    const Eigen::MatrixXd table = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        emp.probs().data(), target.rows(), target.cols());
    total += seminorm(SignedMeasureView(table - target), fc);
  }
  return total / horizon;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  const RdInstance& inst = config.instance;
  const int horizon = inst.source.horizon();
  const Index nx = inst.source.states();
  const RdSolution sol = solve_rate(inst);
  ExperimentResult result{sol.rate, sol.argmin_policy, {}};

  const std::vector<Eigen::MatrixXd> targets = pair_targets(inst.source, inst.target_policy);
  const Eigen::VectorXd cdf = cumulative(state_law(inst.source).probs());

  for (std::size_t k = 0; k < config.n_ladder.size(); ++k) {
    const int block = config.n_ladder[k];
    const std::uint64_t base = stream_seed(config.seed, k);
    ParameterOptions popts;
    popts.epsilon = config.epsilon;
    popts.fc = inst.fc;
    popts.reference_draws = config.reference_draws;
    popts.seed = stream_seed(base, 0);
    popts.branch_cap = config.branch_cap;
    popts.clamp = config.clamp_branches;
    BlockRecord rec;
    rec.block = block;
    rec.trials = config.trials;
    rec.entropy_mode = config.entropy_mode;
    rec.rate_ref = sol.rate;
    rec.params = choose_parameters(inst.source, result.coding_policy, block, popts);
    const SequentialCode code =
        build_code(inst.source, result.coding_policy, block, rec.params, inst.fc, stream_seed(base, 1));
    for (Index m : rec.params.branch_counts) rec.entropy_cap += std::log(static_cast<double>(m) + 1.0);
    rec.entropy_cap /= static_cast<double>(block) * horizon;

    const std::uint64_t trial_base = stream_seed(base, 2);
    std::vector<double> distortion(static_cast<std::size_t>(config.trials));
    std::vector<std::vector<int>> outputs(static_cast<std::size_t>(config.trials));
    std::vector<char> failed(static_cast<std::size_t>(config.trials), 0);
    parallel_for(config.trials, config.threads, [&](int i) {
      SplitMix64 rng(stream_seed(trial_base, static_cast<std::uint64_t>(i)));
      const SymbolBlock x = draw_state_block(cdf, nx, horizon, block, rng);
      const CodeOutput out = code.assign(x);
      const auto idx = static_cast<std::size_t>(i);
      distortion[idx] = block_distortion(x, out.actions, targets, inst.fc);
      outputs[idx].assign(out.actions.data(), out.actions.data() + out.actions.size());
      failed[idx] = std::find(out.messages.begin(), out.messages.end(), Index{0}) != out.messages.end();
    });
    rec.distortion_mean = mean_of(distortion);
    rec.distortion_se = standard_error(distortion, rec.distortion_mean);
    rec.error_rate = static_cast<double>(std::count(failed.begin(), failed.end(), 1)) / config.trials;

    const double scale = static_cast<double>(block) * horizon;
    if (config.entropy_mode == EntropyMode::exact) {
      const ExactCodeReport rep = evaluate_code_exact(code, inst.source, targets, inst.fc);
      rec.entropy_norm = rep.entropy / scale;
      rec.distortion_exact = rep.distortion;
      rec.step_entropy = rep.message_step_entropy;
    } else {
      std::map<std::vector<int>, int> counts;
      for (const auto& o : outputs) ++counts[o];
      double h = 0.0;
      for (const auto& [key, c] : counts) {
        const double p = static_cast<double>(c) / config.trials;
        h -= p * std::log(p);
      }
      rec.entropy_norm = h / scale;
      rec.entropy_bias = (static_cast<double>(counts.size()) - 1.0) / (2.0 * config.trials) / scale;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

SequentialCode code_for_record(const ExperimentConfig& config, const ExperimentResult& result, std::size_t k) {
  const BlockRecord& rec = result.records.at(k);
  const std::uint64_t base = stream_seed(config.seed, k);
  return build_code(config.instance.source, result.coding_policy, rec.block, rec.params, config.instance.fc,
                    stream_seed(base, 1));
}

DistortionEstimate uncoded_distortion(const SourceLaw& source, const DirectedKernel& policy, const FunctionClass& fc,
                                      int block, int trials, std::uint64_t seed) {
  if (block < 1 || trials < 1) throw std::invalid_argument("uncoded_distortion: block and trials must be positive");
  const StrategicMeasure m = assemble_strategic_measure(source, policy);
  const int horizon = m.horizon();
  std::vector<Eigen::MatrixXd> targets;
  for (int t = 0; t < horizon; ++t) targets.push_back(pair_marginal(m, t));
  const Eigen::VectorXd cdf = cumulative(m.joint());
  std::vector<int> radices(static_cast<std::size_t>(2 * horizon));
  std::fill(radices.begin(), radices.begin() + horizon, static_cast<int>(m.states()));
  std::fill(radices.begin() + horizon, radices.end(), static_cast<int>(m.actions()));
  std::vector<int> digits(radices.size());
  std::vector<double> d(static_cast<std::size_t>(trials));
  SymbolBlock x(horizon, block), u(horizon, block);
  for (int i = 0; i < trials; ++i) {
    SplitMix64 rng(stream_seed(seed, static_cast<std::uint64_t>(i)));
    for (int n = 0; n < block; ++n) {
      decode_digits(draw_from_cdf(cdf, rng.uniform()), radices, digits);
      for (int t = 0; t < horizon; ++t) {
        x(t, n) = digits[static_cast<std::size_t>(t)];
        u(t, n) = digits[static_cast<std::size_t>(horizon + t)];
      }
    }
    d[static_cast<std::size_t>(i)] = block_distortion(x, u, targets, fc);
  }
  DistortionEstimate est;
  est.mean = mean_of(d);
  est.standard_error = standard_error(d, est.mean);
  return est;
}

bool ConverseReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const ConverseRow& r) { return r.passed; });
}

ConverseRow converse_row(int block, double entropy_norm, double distortion_exact, const RdInstance& instance) {
  RdInstance at = instance;
  at.delta = std::max(0.0, distortion_exact - 1e-9);
  ConverseRow row;
  row.block = block;
  row.distortion_exact = distortion_exact;
  row.entropy_norm = entropy_norm;
  row.rate_at_distortion = solve_rate(at).rate;
  row.margin = entropy_norm - row.rate_at_distortion;
  row.passed = row.margin >= -kConverseTolerance;
  return row;
}

ConverseReport converse_check(const ExperimentResult& result, const RdInstance& instance) {
  ConverseReport rep;
  for (const BlockRecord& rec : result.records) {
    if (rec.entropy_mode != EntropyMode::exact || !rec.distortion_exact) continue;
    rep.rows.push_back(converse_row(rec.block, rec.entropy_norm, *rec.distortion_exact, instance));
  }
  if (rep.rows.empty()) throw std::invalid_argument("converse_check: no exact-mode records");
  return rep;
}

CapRow achievability_cap(const BlockRecord& record, double epsilon, int horizon) {
  CapRow row;
  row.block = record.block;
  row.entropy_norm = record.entropy_norm;
  row.entropy_cap = record.entropy_cap;
  const double scale = static_cast<double>(record.block) * horizon;
  double rates = 0.0;
  for (int t = 0; t < horizon; ++t) {
    const double r = std::max(0.0, record.params.per_step_rate.at(static_cast<std::size_t>(t)));
    rates += r;
    row.rounding_slack += std::log1p(2.0 * std::exp(-record.block * (r + epsilon)));
  }
  row.rate_plus_epsilon = rates / horizon + epsilon;
  row.rounding_slack /= scale;
  row.entropy_within_cap = record.entropy_norm <= record.entropy_cap + 1e-12;
  row.cap_within_slack = record.entropy_cap <= row.rate_plus_epsilon + row.rounding_slack + 1e-12;
  return row;
}

}  // namespace seqcoord
