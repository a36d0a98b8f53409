#include "seqcoord/prob_core.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

#include "seqcoord/errors.hpp"

namespace seqcoord {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

std::vector<int> radices_for(Index states, Index actions, int state_digits, int action_digits) {
  std::vector<int> r;
  r.insert(r.end(), static_cast<std::size_t>(state_digits), static_cast<int>(states));
  r.insert(r.end(), static_cast<std::size_t>(action_digits), static_cast<int>(actions));
  return r;
}

// P(x_{0..t}, u_{0..t}) for every t, each flattened as (x_0..x_t, u_0..u_t).
std::vector<Eigen::VectorXd> prefix_laws(const SourceLaw& source, const DirectedKernel& policy) {
  const int horizon = source.horizon();
  const Index nx = source.states();
  const Index nu = policy.actions();
  std::vector<Eigen::VectorXd> laws;
  laws.reserve(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    const auto radices = radices_for(nx, nu, t + 1, t + 1);
    const auto prev_radices = radices_for(nx, nu, t, t);
    const Index cells = checked_pow(nx * nu, t + 1);
    Eigen::VectorXd law(cells);
    std::vector<int> digits(radices.size());
    std::vector<int> prev(prev_radices.size());
    std::vector<int> policy_row(static_cast<std::size_t>(2 * t + 1));
    const auto policy_radices = radices_for(nx, nu, t + 1, t);
    const auto source_radices = radices_for(nx, nu, t, 0);
    for (Index c = 0; c < cells; ++c) {
      decode_digits(c, radices, digits);
      // digits = x_0..x_t, u_0..u_t
      for (int s = 0; s < t; ++s) {
        prev[static_cast<std::size_t>(s)] = digits[static_cast<std::size_t>(s)];
        prev[static_cast<std::size_t>(t + s)] = digits[static_cast<std::size_t>(t + 1 + s)];
      }
      const double prev_p = t == 0 ? 1.0 : laws.back()[encode_digits(prev, prev_radices)];
      if (prev_p == 0.0) {
        law[c] = 0.0;
        continue;
      }
      const int xt = digits[static_cast<std::size_t>(t)];
      const int ut = digits[static_cast<std::size_t>(2 * t + 1)];
      const Index src_row = encode_digits(std::span<const int>(digits.data(), static_cast<std::size_t>(t)), source_radices);
      for (int s = 0; s <= t; ++s) policy_row[static_cast<std::size_t>(s)] = digits[static_cast<std::size_t>(s)];
      for (int s = 0; s < t; ++s) policy_row[static_cast<std::size_t>(t + 1 + s)] = digits[static_cast<std::size_t>(t + 1 + s)];
      const Index pol_row = encode_digits(policy_row, policy_radices);
      law[c] = prev_p * source.factor(t)(src_row, xt) * policy.factor(t)(pol_row, ut);
    }
    laws.push_back(std::move(law));
  }
  return laws;
}

void check_stochastic_vector(const Eigen::Ref<const Eigen::VectorXd>& v, const std::string& what) {
  require(v.size() > 0, what + ": empty");
  for (Index i = 0; i < v.size(); ++i) {
    require(std::isfinite(v[i]) && v[i] >= 0.0, what + ": negative or non-finite entry");
  }
  require(std::abs(v.sum() - 1.0) <= kStochasticTol, what + ": entries do not sum to 1");
}

}  // namespace

Index checked_pow(Index base, int exponent) {
  require(base >= 1 && exponent >= 0, "checked_pow: bad arguments");
  Index result = 1;
  for (int i = 0; i < exponent; ++i) {
    if (result > (Index{1} << 62) / base) throw GuardError("table size overflows 2^62");
    result *= base;
  }
  return result;
}

Index encode_digits(std::span<const int> digits, std::span<const int> radices) {
  Index code = 0;
  for (std::size_t i = 0; i < digits.size(); ++i) code = code * radices[i] + digits[i];
  return code;
}

void decode_digits(Index code, std::span<const int> radices, std::span<int> digits) {
  for (std::size_t i = radices.size(); i-- > 0;) {
    digits[i] = static_cast<int>(code % radices[i]);
    code /= radices[i];
  }
}

Alphabet::Alphabet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  require(!labels_.empty(), "Alphabet: needs at least one symbol");
  std::set<std::string> seen(labels_.begin(), labels_.end());
  require(seen.size() == labels_.size(), "Alphabet: labels must be distinct");
}

Alphabet Alphabet::indexed(Index size) {
  std::vector<std::string> labels;
  for (Index i = 0; i < size; ++i) labels.push_back(std::to_string(i));
  return Alphabet(std::move(labels));
}

Index Alphabet::index_of(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  return it == labels_.end() ? -1 : static_cast<Index>(it - labels_.begin());
}

Distribution::Distribution(Eigen::VectorXd probs) : probs_(std::move(probs)) {
  check_stochastic_vector(probs_, "Distribution");
}

Distribution Distribution::uniform(Index size) {
  return Distribution(Eigen::VectorXd::Constant(size, 1.0 / static_cast<double>(size)));
}

Distribution Distribution::point_mass(Index size, Index at) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(size);
  p[at] = 1.0;
  return Distribution(std::move(p));
}

MarkovKernel::MarkovKernel(Eigen::MatrixXd rows) : rows_(std::move(rows)) {
  require(rows_.rows() > 0 && rows_.cols() > 0, "MarkovKernel: empty");
  for (Index r = 0; r < rows_.rows(); ++r) {
    check_stochastic_vector(rows_.row(r).transpose(), "MarkovKernel row " + std::to_string(r));
  }
}

MarkovKernel MarkovKernel::identity(Index size) { return MarkovKernel(Eigen::MatrixXd::Identity(size, size)); }

MarkovKernel MarkovKernel::constant(const Distribution& row, Index inputs) {
  return MarkovKernel(row.probs().transpose().replicate(inputs, 1));
}

SourceLaw::SourceLaw(Index states, std::vector<MarkovKernel> factors) : states_(states), factors_(std::move(factors)) {
  require(states_ >= 1, "SourceLaw: empty state alphabet");
  require(!factors_.empty(), "SourceLaw: horizon must be at least 1");
  for (int t = 0; t < horizon(); ++t) {
    const auto& f = factors_[static_cast<std::size_t>(t)];
    if (f.inputs() != checked_pow(states_, t) || f.outputs() != states_) {
      std::ostringstream msg;
      msg << "SourceLaw: factor " << t << " must be " << checked_pow(states_, t) << "x" << states_ << ", got "
          << f.inputs() << "x" << f.outputs();
      throw std::invalid_argument(msg.str());
    }
  }
}

SourceLaw SourceLaw::iid(const Distribution& marginal, int horizon) {
  std::vector<MarkovKernel> factors;
  for (int t = 0; t < horizon; ++t) {
    factors.push_back(MarkovKernel::constant(marginal, checked_pow(marginal.size(), t)));
  }
  return SourceLaw(marginal.size(), std::move(factors));
}

DirectedKernel::DirectedKernel(Index states, Index actions, std::vector<MarkovKernel> factors)
    : states_(states), actions_(actions), factors_(std::move(factors)) {
  require(states_ >= 1 && actions_ >= 1, "DirectedKernel: empty alphabet");
  require(!factors_.empty(), "DirectedKernel: horizon must be at least 1");
  for (int t = 0; t < horizon(); ++t) {
    const auto& f = factors_[static_cast<std::size_t>(t)];
    const Index rows = checked_pow(states_, t + 1) * checked_pow(actions_, t);
    if (f.inputs() != rows || f.outputs() != actions_) {
      std::ostringstream msg;
      msg << "DirectedKernel: factor " << t << " must be " << rows << "x" << actions_ << ", got " << f.inputs() << "x"
          << f.outputs();
      throw std::invalid_argument(msg.str());
    }
  }
}

DirectedKernel DirectedKernel::memoryless(const MarkovKernel& k, int horizon) {
  const Index nx = k.inputs();
  const Index nu = k.outputs();
  std::vector<MarkovKernel> factors;
  for (int t = 0; t < horizon; ++t) {
    const auto radices = radices_for(nx, nu, t + 1, t);
    const Index rows = checked_pow(nx, t + 1) * checked_pow(nu, t);
    Eigen::MatrixXd m(rows, nu);
    std::vector<int> digits(radices.size());
    for (Index r = 0; r < rows; ++r) {
      decode_digits(r, radices, digits);
      m.row(r) = k.matrix().row(digits[static_cast<std::size_t>(t)]);
    }
    factors.emplace_back(std::move(m));
  }
  return DirectedKernel(nx, nu, std::move(factors));
}

StrategicMeasure::StrategicMeasure(Index states, Index actions, int horizon, Eigen::VectorXd joint)
    : states_(states), actions_(actions), horizon_(horizon), joint_(std::move(joint)) {
  require(horizon_ >= 1, "StrategicMeasure: horizon must be at least 1");
  state_configs_ = checked_pow(states_, horizon_);
  action_configs_ = checked_pow(actions_, horizon_);
  require(joint_.size() == state_configs_ * action_configs_, "StrategicMeasure: tensor size mismatch");
  check_stochastic_vector(joint_, "StrategicMeasure");
  const double violation = causality_violation(states_, actions_, horizon_, as_matrix());
  require(violation <= kCausalityTol, "StrategicMeasure: joint law is not causal");
}

Eigen::MatrixXd StrategicMeasure::as_matrix() const {
  // joint_ is row-major in (state trajectory, action trajectory).
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      joint_.data(), state_configs_, action_configs_);
}

double causality_violation(Index states, Index actions, int horizon, const Eigen::MatrixXd& joint_by_state) {
  const Index xr = joint_by_state.rows();
  const Index ur = joint_by_state.cols();
  const Eigen::VectorXd px = joint_by_state.rowwise().sum();
  double worst = 0.0;
  for (int t = 0; t + 1 < horizon; ++t) {
    // Prefix u_{0..t}: columns grouped by their leading t+1 action digits.
    const Index future_u = checked_pow(actions, horizon - t - 1);
    const Index prefixes_u = ur / future_u;
    const Index future_x = checked_pow(states, horizon - t - 1);
    for (Index x = 0; x < xr; ++x) {
      if (px[x] <= 0.0) continue;
      // First state trajectory with the same x_{0..t} and positive mass.
      const Index base = (x / future_x) * future_x;
      Index ref = base;
      while (ref < x && px[ref] <= 0.0) ++ref;
      if (ref == x) continue;
      for (Index p = 0; p < prefixes_u; ++p) {
        const double a = joint_by_state.row(x).segment(p * future_u, future_u).sum() / px[x];
        const double b = joint_by_state.row(ref).segment(p * future_u, future_u).sum() / px[ref];
        worst = std::max(worst, std::abs(a - b));
      }
    }
  }
  return worst;
}

double exact_entropy(const Distribution& dist) { return entropy(dist.probs()); }

double mutual_information(const Distribution& mu, const MarkovKernel& k) {
  require(mu.size() == k.inputs(), "mutual_information: dimension mismatch");
  return mutual_information(mu.probs(), k.matrix());
}

StrategicMeasure assemble_strategic_measure(const SourceLaw& source, const DirectedKernel& policy) {
  require(source.horizon() == policy.horizon(), "assemble_strategic_measure: horizon mismatch");
  require(source.states() == policy.states(), "assemble_strategic_measure: state alphabet mismatch");
  const int horizon = source.horizon();
  const Index nx = source.states();
  const Index nu = policy.actions();
  const auto radices = radices_for(nx, nu, horizon, horizon);
  const Index cells = checked_pow(nx, horizon) * checked_pow(nu, horizon);
  Eigen::VectorXd joint(cells);
  std::vector<int> digits(radices.size());
  std::vector<int> row_digits;
  for (Index c = 0; c < cells; ++c) {
    decode_digits(c, radices, digits);
    double p = 1.0;
    for (int t = 0; t < horizon && p > 0.0; ++t) {
      row_digits.assign(digits.begin(), digits.begin() + t);
      const Index src_row = encode_digits(row_digits, radices_for(nx, nu, t, 0));
      row_digits.assign(digits.begin(), digits.begin() + t + 1);
      row_digits.insert(row_digits.end(), digits.begin() + horizon, digits.begin() + horizon + t);
      const Index pol_row = encode_digits(row_digits, radices_for(nx, nu, t + 1, t));
      p *= source.factor(t)(src_row, digits[static_cast<std::size_t>(t)]);
      p *= policy.factor(t)(pol_row, digits[static_cast<std::size_t>(horizon + t)]);
    }
    joint[c] = p;
  }
  return StrategicMeasure(nx, nu, horizon, std::move(joint));
}

Eigen::MatrixXd pair_marginal(const StrategicMeasure& measure, int t) {
  const int horizon = measure.horizon();
  require(t >= 0 && t < horizon, "pair_marginal: time index out of range");
  const Index nx = measure.states();
  const Index nu = measure.actions();
  const Index x_stride = checked_pow(nx, horizon - 1 - t);
  const Index u_stride = checked_pow(nu, horizon - 1 - t);
  Eigen::MatrixXd pair = Eigen::MatrixXd::Zero(nx, nu);
  for (Index x = 0; x < measure.state_configs(); ++x) {
    const Index xt = (x / x_stride) % nx;
    for (Index u = 0; u < measure.action_configs(); ++u) {
      pair(xt, (u / u_stride) % nu) += measure.at(x, u);
    }
  }
  return pair;
}

Distribution marginal_state(const StrategicMeasure& measure, int t) {
  require(t >= 0 && t < measure.horizon(), "marginal_state: time index out of range");
  Eigen::VectorXd p = pair_marginal(measure, t).rowwise().sum();
  p /= p.sum();
  return Distribution(std::move(p));
}

MarkovKernel marginal_policy(const StrategicMeasure& measure, int t) {
  require(t >= 0 && t < measure.horizon(), "marginal_policy: time index out of range");
  return MarkovKernel(normalize_rows(pair_marginal(measure, t)));
}

double joint_mutual_information(const StrategicMeasure& measure) {
  const Eigen::MatrixXd joint = measure.as_matrix();
  const Eigen::VectorXd px = joint.rowwise().sum();
  const Eigen::RowVectorXd pu = joint.colwise().sum();
  double info = 0.0;
  for (Index x = 0; x < joint.rows(); ++x) {
    for (Index u = 0; u < joint.cols(); ++u) {
      const double p = joint(x, u);
      if (p > 0.0) info += p * std::log(p / (px[x] * pu[u]));
    }
  }
  return info;
}

DirectedInformation directed_information(const SourceLaw& source, const DirectedKernel& policy) {
  require(source.horizon() == policy.horizon(), "directed_information: horizon mismatch");
  require(source.states() == policy.states(), "directed_information: state alphabet mismatch");
  const Index nx = source.states();
  const Index nu = policy.actions();
  const auto laws = prefix_laws(source, policy);
  DirectedInformation di;
  for (int t = 0; t < source.horizon(); ++t) {
    const auto& law = laws[static_cast<std::size_t>(t)];
    const auto radices = radices_for(nx, nu, t + 1, t + 1);
    // Action-prefix marginal m(u_{0..t}).
    const Index uprefixes = checked_pow(nu, t + 1);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(uprefixes);
    for (Index c = 0; c < law.size(); ++c) m[c % uprefixes] += law[c];
    std::vector<int> digits(radices.size());
    std::vector<int> row(static_cast<std::size_t>(2 * t + 1));
    const auto policy_radices = radices_for(nx, nu, t + 1, t);
    double rt = 0.0;
    for (Index c = 0; c < law.size(); ++c) {
      if (law[c] <= 0.0) continue;
      decode_digits(c, radices, digits);
      for (int s = 0; s <= t; ++s) row[static_cast<std::size_t>(s)] = digits[static_cast<std::size_t>(s)];
      for (int s = 0; s < t; ++s) row[static_cast<std::size_t>(t + 1 + s)] = digits[static_cast<std::size_t>(t + 1 + s)];
      const int ut = digits[static_cast<std::size_t>(2 * t + 1)];
      const double cond = policy.factor(t)(encode_digits(row, policy_radices), ut);
      const Index up = c % uprefixes;
      // nu_t(u_t | u_{0..t-1}) = m(u_{0..t}) / sum_{u'} m(u_{0..t-1}, u')
      const Index parent = up / nu;
      const double denom = m.segment(parent * nu, nu).sum();
      rt += law[c] * std::log(cond * denom / m[up]);
    }
    di.per_step.push_back(rt);
    di.total += rt;
  }
  return di;
}

InfoDensityTable info_density(const SourceLaw& source, const DirectedKernel& policy, int t, int block) {
  require(t >= 0 && t < source.horizon(), "info_density: time index out of range");
  require(block >= 1, "info_density: block size must be positive");
  const Index nx = source.states();
  const Index nu = policy.actions();
  const Index single = checked_pow(nx * nu, t + 1);
  if (checked_pow(single, block) > kInfoDensityCellLimit) {
    throw GuardError("info_density: " + std::to_string(single) + "^" + std::to_string(block) +
                     " cells exceed the enumeration limit of 1e7");
  }
  const auto laws = prefix_laws(source, policy);
  const auto& law = laws[static_cast<std::size_t>(t)];
  const Index uprefixes = checked_pow(nu, t + 1);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(uprefixes);
  for (Index c = 0; c < law.size(); ++c) m[c % uprefixes] += law[c];

  InfoDensityTable table;
  table.time = t;
  table.block = block;
  table.single_probs = law;
  table.single_values = Eigen::VectorXd::Zero(single);
  const auto radices = radices_for(nx, nu, t + 1, t + 1);
  const auto policy_radices = radices_for(nx, nu, t + 1, t);
  std::vector<int> digits(radices.size());
  std::vector<int> row(static_cast<std::size_t>(2 * t + 1));
  for (Index c = 0; c < single; ++c) {
    if (law[c] <= 0.0) continue;
    decode_digits(c, radices, digits);
    for (int s = 0; s <= t; ++s) row[static_cast<std::size_t>(s)] = digits[static_cast<std::size_t>(s)];
    for (int s = 0; s < t; ++s) row[static_cast<std::size_t>(t + 1 + s)] = digits[static_cast<std::size_t>(t + 1 + s)];
    const double cond = policy.factor(t)(encode_digits(row, policy_radices), digits[static_cast<std::size_t>(2 * t + 1)]);
    const Index up = c % uprefixes;
    const double marginal_cond = m[up] / m.segment((up / nu) * nu, nu).sum();
    table.single_values[c] = std::log(cond / marginal_cond);
  }

  const Index cells = checked_pow(single, block);
  table.values.resize(cells);
  table.probs.resize(cells);
  for (Index cell = 0; cell < cells; ++cell) {
    Index rest = cell;
    double v = 0.0;
    double p = 1.0;
    for (int n = 0; n < block; ++n) {
      const Index c = rest % single;
      rest /= single;
      v += table.single_values[c];
      p *= table.single_probs[c];
    }
    table.values[cell] = p > 0.0 ? v : 0.0;
    table.probs[cell] = p;
  }
  return table;
}

Distribution state_law(const SourceLaw& source) {
  const int horizon = source.horizon();
  const Index nx = source.states();
  const Index configs = checked_pow(nx, horizon);
  const std::vector<int> radices(static_cast<std::size_t>(horizon), static_cast<int>(nx));
  std::vector<int> digits(radices.size());
  Eigen::VectorXd p(configs);
  for (Index x = 0; x < configs; ++x) {
    decode_digits(x, radices, digits);
    double v = 1.0;
    for (int t = 0; t < horizon; ++t) {
      const Index row = encode_digits(std::span<const int>(digits.data(), static_cast<std::size_t>(t)),
                                      std::span<const int>(radices.data(), static_cast<std::size_t>(t)));
      v *= source.factor(t)(row, digits[static_cast<std::size_t>(t)]);
    }
    p[x] = v;
  }
  p /= p.sum();
  return Distribution(std::move(p));
}

MarkovKernel joint_conditional(const DirectedKernel& policy) {
  const int horizon = policy.horizon();
  const Index nx = policy.states();
  const Index nu = policy.actions();
  const Index xr = checked_pow(nx, horizon);
  const Index ur = checked_pow(nu, horizon);
  const std::vector<int> xrad(static_cast<std::size_t>(horizon), static_cast<int>(nx));
  const std::vector<int> urad(static_cast<std::size_t>(horizon), static_cast<int>(nu));
  std::vector<int> xd(xrad.size()), ud(urad.size()), row;
  Eigen::MatrixXd q(xr, ur);
  for (Index x = 0; x < xr; ++x) {
    decode_digits(x, xrad, xd);
    for (Index u = 0; u < ur; ++u) {
      decode_digits(u, urad, ud);
      double v = 1.0;
      for (int t = 0; t < horizon && v > 0.0; ++t) {
        row.assign(xd.begin(), xd.begin() + t + 1);
        row.insert(row.end(), ud.begin(), ud.begin() + t);
        v *= policy.factor(t)(encode_digits(row, radices_for(nx, nu, t + 1, t)), ud[static_cast<std::size_t>(t)]);
      }
      q(x, u) = v;
    }
  }
  return MarkovKernel(normalize_rows(q));
}

DirectedKernel disintegrate(const Eigen::MatrixXd& joint_conditional, Index states, Index actions, int horizon) {
  const Index xr = checked_pow(states, horizon);
  const Index ur = checked_pow(actions, horizon);
  require(joint_conditional.rows() == xr && joint_conditional.cols() == ur, "disintegrate: shape mismatch");
  const Eigen::MatrixXd q = normalize_rows(joint_conditional.cwiseMax(0.0));
  std::vector<MarkovKernel> factors;
  for (int t = 0; t < horizon; ++t) {
    const auto radices = radices_for(states, actions, t + 1, t);
    const Index rows = checked_pow(states, t + 1) * checked_pow(actions, t);
    const Index x_future = checked_pow(states, horizon - t - 1);
    const Index u_future = checked_pow(actions, horizon - t - 1);
    const Index uprefix_count = checked_pow(actions, t);
    Eigen::MatrixXd f(rows, actions);
    for (Index r = 0; r < rows; ++r) {
      const Index xprefix = r / uprefix_count;
      const Index uprefix = r % uprefix_count;
      const Index x = xprefix * x_future;  // reference future: all zeros
      for (Index a = 0; a < actions; ++a) {
        f(r, a) = q.row(x).segment((uprefix * actions + a) * u_future, u_future).sum();
      }
    }
    factors.emplace_back(normalize_rows(f));
  }
  return DirectedKernel(states, actions, std::move(factors));
}

std::vector<Eigen::MatrixXd> action_factors(const StrategicMeasure& measure) {
  const int horizon = measure.horizon();
  const Index nu = measure.actions();
  const Eigen::VectorXd nu_law = measure.as_matrix().colwise().sum().transpose();
  std::vector<Eigen::MatrixXd> factors;
  for (int t = 0; t < horizon; ++t) {
    const Index future = checked_pow(nu, horizon - t - 1);
    const Index rows = checked_pow(nu, t);
    Eigen::MatrixXd f(rows, nu);
    for (Index r = 0; r < rows; ++r) {
      for (Index a = 0; a < nu; ++a) f(r, a) = nu_law.segment((r * nu + a) * future, future).sum();
    }
    factors.push_back(normalize_rows(f));
  }
  return factors;
}

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Index r = 0; r < m.rows(); ++r) {
    const double s = m.row(r).sum();
    if (s > 0.0) {
      out.row(r) = m.row(r) / s;
    } else {
      out.row(r).setConstant(1.0 / static_cast<double>(m.cols()));
    }
  }
  return out;
}

}  // namespace seqcoord
