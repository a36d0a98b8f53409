#include "seqcoord/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace seqcoord::oracle {

namespace {

Index ipow(Index b, int e) {
  Index r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// Digit k (0 = most significant) of code in base `base` with `width` digits.
Index digit(Index code, Index base, int width, int k) { return (code / ipow(base, width - 1 - k)) % base; }

double entropy_of(const Eigen::VectorXd& p) {
  double h = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  }
  return h;
}

}  // namespace

int uniform_int(SplitMix64& rng, int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(rng() % span);
}

Eigen::VectorXd grid_distribution(SplitMix64& rng, Index size, int denominator, int floor) {
  const int spare = denominator - static_cast<int>(size) * floor;
  if (size < 1 || spare < 0) throw std::invalid_argument("grid_distribution: floor too large");
  std::vector<int> cuts{0, spare};
  for (Index i = 0; i + 1 < size; ++i) cuts.push_back(uniform_int(rng, 0, spare));
  std::sort(cuts.begin(), cuts.end());
  Eigen::VectorXd p(size);
  for (Index i = 0; i < size; ++i) p[i] = static_cast<double>(cuts[static_cast<std::size_t>(i) + 1] - cuts[static_cast<std::size_t>(i)] + floor) / denominator;
  return p;
}

Eigen::MatrixXd grid_kernel(SplitMix64& rng, Index rows, Index cols, int denominator, int floor) {
  Eigen::MatrixXd k(rows, cols);
  for (Index r = 0; r < rows; ++r) k.row(r) = grid_distribution(rng, cols, denominator, floor).transpose();
  return k;
}

SourceLaw random_source(SplitMix64& rng, Index states, int horizon, int floor) {
  std::vector<MarkovKernel> f;
  for (int t = 0; t < horizon; ++t) f.emplace_back(grid_kernel(rng, ipow(states, t), states, 100, floor));
  return SourceLaw(states, std::move(f));
}

DirectedKernel random_policy(SplitMix64& rng, Index states, Index actions, int horizon, int floor) {
  std::vector<MarkovKernel> f;
  for (int t = 0; t < horizon; ++t) {
    f.emplace_back(grid_kernel(rng, ipow(states, t + 1) * ipow(actions, t), actions, 100, floor));
  }
  return DirectedKernel(states, actions, std::move(f));
}

double mutual_information_double_sum(const Eigen::VectorXd& mu, const Eigen::MatrixXd& k) {
  double info = 0.0;
  for (Index u = 0; u < k.cols(); ++u) {
    double out = 0.0;
    for (Index x = 0; x < k.rows(); ++x) out += mu[x] * k(x, u);
    for (Index x = 0; x < k.rows(); ++x) {
      const double p = mu[x] * k(x, u);
      if (p > 0.0) info += p * std::log(k(x, u) / out);
    }
  }
  return info;
}

Eigen::MatrixXd product_formula_joint(const SourceLaw& source, const DirectedKernel& policy) {
  const int T = source.horizon();
  const Index nx = source.states(), nu = policy.actions();
  const Index xs = ipow(nx, T), us = ipow(nu, T);
  Eigen::MatrixXd joint(xs, us);
  for (Index x = 0; x < xs; ++x) {
    for (Index u = 0; u < us; ++u) {
      double p = 1.0;
      Index xhist = 0, uhist = 0;  // codes of x_0..x_{t-1} and u_0..u_{t-1}
      for (int t = 0; t < T; ++t) {
        const Index xt = digit(x, nx, T, t), ut = digit(u, nu, T, t);
        p *= source.factor(t).matrix()(xhist, xt);
        const Index prow = (xhist * nx + xt) * ipow(nu, t) + uhist;
        p *= policy.factor(t).matrix()(prow, ut);
        xhist = xhist * nx + xt;
        uhist = uhist * nu + ut;
      }
      joint(x, u) = p;
    }
  }
  return joint;
}

double joint_table_information(const Eigen::MatrixXd& joint) {
  const Eigen::VectorXd px = joint.rowwise().sum();
  const Eigen::VectorXd pu = joint.colwise().sum().transpose();
  double info = 0.0;
  for (Index x = 0; x < joint.rows(); ++x) {
    for (Index u = 0; u < joint.cols(); ++u) {
      if (joint(x, u) > 0.0) info += joint(x, u) * std::log(joint(x, u) / (px[x] * pu[u]));
    }
  }
  return info;
}

double directed_information_from_joint(const Eigen::MatrixXd& joint, Index states, Index actions, int horizon) {
  // H of the marginal on (x_0..x_{a-1}, u_0..u_{b-1}).
  auto h = [&](int a, int b) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(ipow(states, a) * ipow(actions, b));
    for (Index x = 0; x < joint.rows(); ++x) {
      for (Index u = 0; u < joint.cols(); ++u) {
        const Index cell = (x / ipow(states, horizon - a)) * ipow(actions, b) + u / ipow(actions, horizon - b);
        m[cell] += joint(x, u);
      }
    }
    return entropy_of(m);
  };
  double total = 0.0;
  for (int t = 1; t <= horizon; ++t) total += h(t, t - 1) + h(0, t) - h(t, t) - h(0, t - 1);
  return total;
}

double ks_threshold_scan(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q, const Eigen::MatrixXd& cost) {
  double best = 0.0;
  for (Index i = 0; i < cost.size(); ++i) {
    const double a = cost(i);
    double fp = 0.0, fq = 0.0;
    for (Index j = 0; j < cost.size(); ++j) {
      if (cost(j) <= a) {
        fp += p(j);
        fq += q(j);
      }
    }
    best = std::max(best, std::abs(fp - fq));
  }
  return best;
}

double w1_cdf_area(const Eigen::VectorXd& points, const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  std::vector<Index> order(static_cast<std::size_t>(points.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return points[a] < points[b]; });
  double fp = 0.0, fq = 0.0, area = 0.0;
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    fp += p[order[k]];
    fq += q[order[k]];
    area += std::abs(fp - fq) * (points[order[k + 1]] - points[order[k]]);
  }
  return area;
}

Eigen::MatrixXd line_metric(const Eigen::VectorXd& points) {
  const Index n = points.size();
  Eigen::MatrixXd d(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) d(i, j) = std::abs(points[i] - points[j]);
  }
  return d;
}

SymbolBlock reference_assign(const SequentialCode& code, const SymbolBlock& x_block) {
  const TreeCodebook& book = code.codebook;
  const int T = book.horizon(), N = book.block();
  SymbolBlock out = SymbolBlock::Zero(T, N);
  std::vector<Index> path;
  for (int t = 0; t < T; ++t) {
    const TypicalSetSpec& spec = code.specs[static_cast<std::size_t>(t)];
    Index chosen = 0;
    for (Index j = 1; j <= book.branch_counts()[static_cast<std::size_t>(t)] && chosen == 0; ++j) {
      path.push_back(j);
      const SymbolBlock tuples = book.path_tuples(path);
      Eigen::MatrixXd emp = Eigen::MatrixXd::Zero(spec.reference.rows(), spec.reference.cols());
      for (int n = 0; n < N; ++n) emp(x_block(t, n), tuples(t, n)) += 1.0 / N;
      const double psi = std::min(1.0, 0.5 * seminorm(emp, spec.reference, spec.fc));
      if (psi <= spec.threshold) {
        chosen = j;
        out.row(t) = tuples.row(t);
      } else {
        path.pop_back();
      }
    }
    if (chosen == 0) {
      for (int s = t; s < T; ++s) out.row(s).setZero();
      break;
    }
  }
  return out;
}

double enumerated_output_entropy(const SequentialCode& code, const SourceLaw& source) {
  const int T = source.horizon(), N = code.codebook.block();
  const Index nx = source.states();
  const Index trajs = ipow(nx, T);
  Eigen::VectorXd ptraj(trajs);
  for (Index r = 0; r < trajs; ++r) {
    double p = 1.0;
    Index hist = 0;
    for (int t = 0; t < T; ++t) {
      const Index xt = digit(r, nx, T, t);
      p *= source.factor(t).matrix()(hist, xt);
      hist = hist * nx + xt;
    }
    ptraj[r] = p;
  }
  std::map<std::vector<int>, double> law;
  std::vector<Index> which(static_cast<std::size_t>(N), 0);
  SymbolBlock x(T, N);
  while (true) {
    double p = 1.0;
    for (int n = 0; n < N; ++n) {
      p *= ptraj[which[static_cast<std::size_t>(n)]];
      for (int t = 0; t < T; ++t) x(t, n) = static_cast<int>(digit(which[static_cast<std::size_t>(n)], nx, T, t));
    }
    if (p > 0.0) {
      const SymbolBlock u = reference_assign(code, x);
      law[std::vector<int>(u.data(), u.data() + u.size())] += p;
    }
    int n = N - 1;
    while (n >= 0 && ++which[static_cast<std::size_t>(n)] == trajs) which[static_cast<std::size_t>(n--)] = 0;
    if (n < 0) break;
  }
  double h = 0.0;
  for (const auto& [k, p] : law) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace seqcoord::oracle
