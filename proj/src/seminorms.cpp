#include "seqcoord/seminorms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "seqcoord/errors.hpp"
#include "seqcoord/linprog.hpp"

namespace seqcoord {

namespace {

constexpr double kLpAgreeTol = 1e-9;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v(m.size());
  for (Index x = 0; x < m.rows(); ++x) v.segment(x * m.cols(), m.cols()) = m.row(x).transpose();
  return v;
}

// Sorted distinct values with near-ties merged; `bucket[i]` maps entry i.
std::vector<double> distinct_levels(const Eigen::VectorXd& values, std::vector<Index>& bucket) {
  std::vector<Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values[a] < values[b]; });
  std::vector<double> levels;
  bucket.assign(order.size(), 0);
  for (Index i : order) {
    const double v = values[i];
    if (levels.empty() || v - levels.back() > 1e-12 * std::max(1.0, std::abs(v))) levels.push_back(v);
    bucket[static_cast<std::size_t>(i)] = static_cast<Index>(levels.size()) - 1;
  }
  return levels;
}

double level_set_sup(const Eigen::VectorXd& delta, const Eigen::VectorXd& cost) {
  std::vector<Index> bucket;
  const auto levels = distinct_levels(cost, bucket);
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(static_cast<Index>(levels.size()));
  for (Index i = 0; i < delta.size(); ++i) mass[bucket[static_cast<std::size_t>(i)]] += delta[i];
  double sup = 0.0, cdf = 0.0;
  for (Index k = 0; k < mass.size(); ++k) {
    cdf += mass[k];
    sup = std::max(sup, std::abs(cdf));
  }
  return sup;
}

void check_same_size(const Distribution& p, const Distribution& q, const Eigen::MatrixXd& metric) {
  if (p.size() != q.size() || metric.rows() != p.size() || metric.cols() != p.size()) {
    throw std::invalid_argument("distributions and metric disagree in size");
  }
}

void require_optimal(const LpResult& r, const char* what) {
  if (r.status != LpStatus::optimal) throw NumericError(std::string(what) + ": LP did not reach optimality");
}

void require_agree(double primal, double dual, const char* what) {
  if (std::abs(primal - dual) > kLpAgreeTol * std::max(1.0, std::abs(primal))) {
    throw NumericError(std::string(what) + ": primal/dual mismatch " + std::to_string(primal) + " vs " +
                       std::to_string(dual));
  }
}

}  // namespace

const char* kind_name(const FunctionClass& fc) {
  return std::visit(overloaded{[](const TotalVariation&) { return "total_variation"; },
                               [](const FiniteTable&) { return "finite_table"; },
                               [](const CostLevelSets&) { return "cost_level_sets"; },
                               [](const BoundedLipschitz&) { return "bounded_lipschitz"; }},
                    fc);
}

Eigen::MatrixXd discrete_metric(Index cells) {
  return Eigen::MatrixXd::Ones(cells, cells) - Eigen::MatrixXd::Identity(cells, cells);
}

void validate_metric(const Eigen::MatrixXd& d) {
  if (d.rows() != d.cols() || d.rows() == 0) throw std::invalid_argument("metric must be a nonempty square matrix");
  const Index n = d.rows();
  for (Index i = 0; i < n; ++i) {
    if (d(i, i) != 0.0) throw std::invalid_argument("metric diagonal must be zero");
    for (Index j = 0; j < n; ++j) {
      if (!std::isfinite(d(i, j))) throw std::invalid_argument("metric entries must be finite");
      if (i != j && d(i, j) <= 0.0) throw std::invalid_argument("metric must separate distinct points");
      if (std::abs(d(i, j) - d(j, i)) > 1e-12) throw std::invalid_argument("metric must be symmetric");
      for (Index k = 0; k < n; ++k) {
        if (d(i, k) > d(i, j) + d(j, k) + 1e-12) throw std::invalid_argument("metric violates the triangle inequality");
      }
    }
  }
}

void validate(const FunctionClass& fc, Index states, Index actions) {
  std::visit(overloaded{[](const TotalVariation&) {},
                        [&](const FiniteTable& t) {
                          if (t.functions.empty()) throw std::invalid_argument("finite_table needs at least one function");
                          for (const auto& f : t.functions) {
                            if (f.rows() != states || f.cols() != actions) {
                              throw std::invalid_argument("finite_table function has wrong shape");
                            }
                            if (!f.allFinite() || f.cwiseAbs().maxCoeff() > 1.0) {
                              throw std::invalid_argument("finite_table entries must lie in [-1, 1]");
                            }
                          }
                        },
                        [&](const CostLevelSets& c) {
                          if (c.cost.rows() != states || c.cost.cols() != actions) {
                            throw std::invalid_argument("cost table has wrong shape");
                          }
                          if (!c.cost.allFinite()) throw std::invalid_argument("cost table must be finite");
                        },
                        [&](const BoundedLipschitz& b) {
                          if (b.metric.rows() != states * actions) {
                            throw std::invalid_argument("metric must have |X||U| rows");
                          }
                          validate_metric(b.metric);
                        }},
             fc);
}

SignedMeasureView::SignedMeasureView(Eigen::MatrixXd delta) : delta_(std::move(delta)) {
  if (!delta_.allFinite()) throw std::invalid_argument("signed measure has non-finite entries");
  if (std::abs(delta_.sum()) > 1e-12 * std::max(1.0, delta_.cwiseAbs().sum())) {
    throw std::invalid_argument("signed measure must have zero total mass");
  }
}

SignedMeasureView SignedMeasureView::difference(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) throw std::invalid_argument("pair tables differ in shape");
  return SignedMeasureView(p - q);
}

Eigen::VectorXd SignedMeasureView::flat() const { return flatten(delta_); }

double seminorm(const SignedMeasureView& view, const FunctionClass& fc) {
  const Eigen::MatrixXd& delta = view.delta();
  return std::visit(overloaded{[&](const TotalVariation&) { return delta.cwiseAbs().sum(); },
                               [&](const FiniteTable& t) {
                                 double best = 0.0;
                                 for (const auto& f : t.functions) {
                                   if (f.rows() != delta.rows() || f.cols() != delta.cols()) {
                                     throw std::invalid_argument("finite_table function has wrong shape");
                                   }
                                   best = std::max(best, std::abs(delta.cwiseProduct(f).sum()));
                                 }
                                 return best;
                               },
                               [&](const CostLevelSets& c) {
                                 if (c.cost.rows() != delta.rows() || c.cost.cols() != delta.cols()) {
                                   throw std::invalid_argument("cost table has wrong shape");
                                 }
                                 return level_set_sup(flatten(delta), flatten(c.cost));
                               },
                               [&](const BoundedLipschitz& b) {
                                 if (b.metric.rows() != delta.size()) throw std::invalid_argument("metric has wrong size");
                                 return bounded_lipschitz(flatten(delta), b.metric);
                               }},
                    fc);
}

double seminorm(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q, const FunctionClass& fc) {
  return seminorm(SignedMeasureView::difference(p, q), fc);
}

CostPushforward pushforward(const Eigen::MatrixXd& pair_law, const Eigen::MatrixXd& cost) {
  if (pair_law.rows() != cost.rows() || pair_law.cols() != cost.cols()) {
    throw std::invalid_argument("cost table has wrong shape");
  }
  const Eigen::VectorXd c = flatten(cost);
  const Eigen::VectorXd p = flatten(pair_law);
  std::vector<Index> bucket;
  const auto levels = distinct_levels(c, bucket);
  CostPushforward out;
  out.grid = Eigen::Map<const Eigen::VectorXd>(levels.data(), static_cast<Index>(levels.size()));
  out.probs = Eigen::VectorXd::Zero(out.grid.size());
  for (Index i = 0; i < p.size(); ++i) out.probs[bucket[static_cast<std::size_t>(i)]] += p[i];
  return out;
}

double ks_distance(const Eigen::VectorXd& grid, const Distribution& p, const Distribution& q) {
  if (grid.size() != p.size() || grid.size() != q.size()) throw std::invalid_argument("ks_distance: grid size mismatch");
  for (Index i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("ks_distance: grid must be strictly increasing");
  }
  double sup = 0.0, fp = 0.0, fq = 0.0;
  for (Index i = 0; i < grid.size(); ++i) {
    fp += p[i];
    fq += q[i];
    sup = std::max(sup, std::abs(fp - fq));
  }
  return sup;
}

double wasserstein1(const Distribution& p, const Distribution& q, const Eigen::MatrixXd& metric) {
  check_same_size(p, q, metric);
  validate_metric(metric);
  const Index n = p.size();

  // Coupling: variables pi(i, j) at i * n + j.
  LinearProgram primal;
  primal.cost.resize(n * n);
  primal.a_eq = Eigen::MatrixXd::Zero(2 * n, n * n);
  primal.b_eq.resize(2 * n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      primal.cost[i * n + j] = metric(i, j);
      primal.a_eq(i, i * n + j) = 1.0;
      primal.a_eq(n + j, i * n + j) = 1.0;
    }
    primal.b_eq[i] = p[i];
    primal.b_eq[n + i] = q[i];
  }
  const LpResult rp = solve_lp(primal);
  require_optimal(rp, "wasserstein1 coupling");

  // Potentials: max <p - q, f> with f_i - f_j <= d_ij and f_0 = 0.
  LinearProgram dual;
  dual.cost = -(p.probs() - q.probs());
  dual.free_vars.assign(static_cast<std::size_t>(n), true);
  dual.a_ub = Eigen::MatrixXd::Zero(n * (n - 1), n);
  dual.b_ub.resize(n * (n - 1));
  Index row = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      dual.a_ub(row, i) = 1.0;
      dual.a_ub(row, j) = -1.0;
      dual.b_ub[row++] = metric(i, j);
    }
  }
  dual.a_eq = Eigen::MatrixXd::Zero(1, n);
  dual.a_eq(0, 0) = 1.0;
  dual.b_eq = Eigen::VectorXd::Zero(1);
  const LpResult rd = solve_lp(dual);
  require_optimal(rd, "wasserstein1 potentials");
  require_agree(rp.objective, -rd.objective, "wasserstein1");
  return std::max(0.0, rp.objective);
}

double bounded_lipschitz(const Distribution& p, const Distribution& q, const Eigen::MatrixXd& metric) {
  check_same_size(p, q, metric);
  validate_metric(metric);
  return bounded_lipschitz(p.probs() - q.probs(), metric);
}

double bounded_lipschitz(const Eigen::VectorXd& delta, const Eigen::MatrixXd& metric) {
  const Index n = delta.size();
  if (metric.rows() != n || metric.cols() != n) throw std::invalid_argument("bounded_lipschitz: metric size mismatch");
  if (delta.cwiseAbs().maxCoeff() == 0.0) return 0.0;

  // Primal over (f_0..f_{n-1}, a, L): maximize <delta, f>.
  const Index pairs = n * (n - 1);
  LinearProgram primal;
  primal.cost = Eigen::VectorXd::Zero(n + 2);
  primal.cost.head(n) = -delta;
  primal.free_vars.assign(static_cast<std::size_t>(n + 2), false);
  for (Index i = 0; i < n; ++i) primal.free_vars[static_cast<std::size_t>(i)] = true;
  primal.a_ub = Eigen::MatrixXd::Zero(pairs + 2 * n + 1, n + 2);
  primal.b_ub = Eigen::VectorXd::Zero(pairs + 2 * n + 1);
  Index row = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      primal.a_ub(row, i) = 1.0;
      primal.a_ub(row, j) = -1.0;
      primal.a_ub(row++, n + 1) = -metric(i, j);
    }
  }
  for (Index i = 0; i < n; ++i) {
    primal.a_ub(row, i) = 1.0;
    primal.a_ub(row++, n) = -1.0;
    primal.a_ub(row, i) = -1.0;
    primal.a_ub(row++, n) = -1.0;
  }
  primal.a_ub(row, n) = 1.0;
  primal.a_ub(row, n + 1) = 1.0;
  primal.b_ub[row] = 1.0;
  const LpResult rp = solve_lp(primal);
  require_optimal(rp, "bounded_lipschitz primal");

  // Dual: minimize lambda over flows gamma, slacks alpha/beta:
  // out-flow - in-flow + alpha - beta = delta, sum(alpha + beta) <= lambda,
  // sum(gamma d) <= lambda.
  const Index nv = pairs + 2 * n + 1;
  LinearProgram dual;
  dual.cost = Eigen::VectorXd::Zero(nv);
  dual.cost[nv - 1] = 1.0;
  dual.a_eq = Eigen::MatrixXd::Zero(n, nv);
  dual.b_eq = delta;
  dual.a_ub = Eigen::MatrixXd::Zero(2, nv);
  dual.b_ub = Eigen::VectorXd::Zero(2);
  Index col = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      dual.a_eq(i, col) += 1.0;
      dual.a_eq(j, col) -= 1.0;
      dual.a_ub(1, col++) = metric(i, j);
    }
  }
  for (Index i = 0; i < n; ++i) {
    dual.a_eq(i, pairs + i) = 1.0;
    dual.a_eq(i, pairs + n + i) = -1.0;
    dual.a_ub(0, pairs + i) = 1.0;
    dual.a_ub(0, pairs + n + i) = 1.0;
  }
  dual.a_ub(0, nv - 1) = -1.0;
  dual.a_ub(1, nv - 1) = -1.0;
  const LpResult rd = solve_lp(dual);
  require_optimal(rd, "bounded_lipschitz dual");
  require_agree(-rp.objective, rd.objective, "bounded_lipschitz");
  return std::max(0.0, -rp.objective);
}

}  // namespace seqcoord
