#include "seqcoord/rd_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "seqcoord/errors.hpp"

namespace seqcoord {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense constraint rows accumulated before the variable count is final.
class Rows {
 public:
  explicit Rows(Index n) : n_(n) {}
  Eigen::RowVectorXd fresh() const { return Eigen::RowVectorXd::Zero(n_); }
  void add(Eigen::RowVectorXd row, double rhs) {
    rows_.push_back(std::move(row));
    rhs_.push_back(rhs);
  }
  Eigen::MatrixXd matrix() const {
    Eigen::MatrixXd m(static_cast<Index>(rows_.size()), n_);
    for (std::size_t i = 0; i < rows_.size(); ++i) m.row(static_cast<Index>(i)) = rows_[i];
    return m;
  }
  Eigen::VectorXd vector() const {
    return Eigen::Map<const Eigen::VectorXd>(rhs_.data(), static_cast<Index>(rhs_.size()));
  }

 private:
  Index n_;
  std::vector<Eigen::RowVectorXd> rows_;
  std::vector<double> rhs_;
};

Eigen::VectorXd flat_pair(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v(m.size());
  for (Index x = 0; x < m.rows(); ++x) v.segment(x * m.cols(), m.cols()) = m.row(x).transpose();
  return v;
}

std::vector<Eigen::MatrixXd> target_pairs(const RdInstance& inst) {
  const StrategicMeasure target = assemble_strategic_measure(inst.source, inst.target_policy);
  std::vector<Eigen::MatrixXd> out;
  for (int t = 0; t < inst.source.horizon(); ++t) out.push_back(pair_marginal(target, t));
  return out;
}

double gap_against(const std::vector<Eigen::MatrixXd>& targets, const RdInstance& inst, const DirectedKernel& cand) {
  const StrategicMeasure m = assemble_strategic_measure(inst.source, cand);
  double total = 0.0;
  for (int t = 0; t < m.horizon(); ++t) total += seminorm(pair_marginal(m, t), targets[static_cast<std::size_t>(t)], inst.fc);
  return total / m.horizon();
}

// I(p, K) / scale over cells not in `mask`; K is read from w through `cell`.
struct InfoObjective {
  Eigen::VectorXd p;
  Index rows = 0;
  Index cols = 0;
  std::vector<bool> mask;
  double scale = 1.0;

  bool live(Index r, Index c) const { return p[r] > 0.0 && !mask[static_cast<std::size_t>(r * cols + c)]; }

  double value(const Eigen::Ref<const Eigen::VectorXd>& k) const {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) {
        if (!live(r, c)) continue;
        const double v = k[r * cols + c];
        if (!(v > 0.0)) return kInf;
        q[c] += p[r] * v;
      }
    }
    double info = 0.0;
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) {
        if (live(r, c)) info += p[r] * k[r * cols + c] * std::log(k[r * cols + c] / q[c]);
      }
    }
    return info / scale;
  }

  // Gradient and Hessian with respect to the flattened K.
  void derivatives(const Eigen::Ref<const Eigen::VectorXd>& k, Eigen::Ref<Eigen::VectorXd> grad,
                   Eigen::Ref<Eigen::MatrixXd> hess) const {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) {
        if (live(r, c)) q[c] += p[r] * k[r * cols + c];
      }
    }
    grad.setZero();
    hess.setZero();
    for (Index c = 0; c < cols; ++c) {
      if (q[c] <= 0.0) continue;
      for (Index r = 0; r < rows; ++r) {
        if (!live(r, c)) continue;
        const Index i = r * cols + c;
        grad[i] = p[r] * std::log(k[i] / q[c]) / scale;
        hess(i, i) += p[r] / (k[i] * scale);
        for (Index r2 = 0; r2 < rows; ++r2) {
          if (live(r2, c)) hess(i, r2 * cols + c) -= p[r] * p[r2] / (q[c] * scale);
        }
      }
    }
  }
};

// Layout of the solver variables: the joint conditional Q (row-major,
// |X|^T x |U|^T) followed by per-time seminorm auxiliaries.
struct RdProgram {
  Polyhedron poly;
  Index nq = 0;
  Index nx_traj = 0;
  Index nu_traj = 0;
  std::vector<Index> aux_offset;  // per time step
};

Index aux_count(const FunctionClass& fc, Index cells) {
  return std::visit(overloaded{[&](const TotalVariation&) { return cells; },
                               [](const FiniteTable&) { return Index{1}; },
                               [](const CostLevelSets&) { return Index{1}; },
                               [&](const BoundedLipschitz&) { return cells * (cells - 1) + 2 * cells + 1; }},
                    fc);
}

// Test vectors a with a.v bounding the seminorm for the finite classes.
std::vector<Eigen::VectorXd> test_vectors(const FunctionClass& fc) {
  std::vector<Eigen::VectorXd> out;
  std::visit(overloaded{[](const TotalVariation&) {}, [](const BoundedLipschitz&) {},
                        [&](const FiniteTable& t) {
                          for (const auto& f : t.functions) out.push_back(flat_pair(f));
                        },
                        [&](const CostLevelSets& c) {
                          const Eigen::VectorXd cost = flat_pair(c.cost);
                          std::vector<double> levels(cost.data(), cost.data() + cost.size());
                          std::sort(levels.begin(), levels.end());
                          // Below the top level; the top cumulative sum is identically zero.
                          double prev = -kInf;
                          for (double a : levels) {
                            if (a - prev <= 1e-12 * std::max(1.0, std::abs(a))) continue;
                            prev = a;
                            if (a >= levels.back() - 1e-12 * std::max(1.0, std::abs(a))) break;
                            Eigen::VectorXd ind = Eigen::VectorXd::Zero(cost.size());
                            for (Index i = 0; i < cost.size(); ++i) ind[i] = cost[i] <= a + 1e-12 * std::max(1.0, std::abs(a)) ? 1.0 : 0.0;
                            out.push_back(ind);
                          }
                        }},
             fc);
  return out;
}

RdProgram build_program(const RdInstance& inst) {
  const int horizon = inst.source.horizon();
  const Index nx = inst.source.states();
  const Index nu = inst.target_policy.actions();
  const Index cells = nx * nu;
  RdProgram prog;
  prog.nx_traj = checked_pow(nx, horizon);
  prog.nu_traj = checked_pow(nu, horizon);
  prog.nq = prog.nx_traj * prog.nu_traj;
  const bool pinned = inst.delta == 0.0;
  Index n = prog.nq;
  for (int t = 0; t < horizon; ++t) {
    prog.aux_offset.push_back(n);
    if (!pinned) n += aux_count(inst.fc, cells);
  }
  if (n > kMaxRdVariables) {
    throw GuardError("solve_rate: " + std::to_string(n) + " variables exceed the limit of " + std::to_string(kMaxRdVariables));
  }

  const Eigen::VectorXd px = state_law(inst.source).probs();
  const auto targets = target_pairs(inst);
  Rows eq(n), ub(n);

  // Row sums.
  for (Index r = 0; r < prog.nx_traj; ++r) {
    auto row = eq.fresh();
    row.segment(r * prog.nu_traj, prog.nu_traj).setOnes();
    eq.add(row, 1.0);
  }
  // Causality: the u_{[t]} marginal of row r equals that of the row sharing
  // x_{[t]} with an all-zero future.
  for (int t = 0; t + 1 < horizon; ++t) {
    const Index x_future = checked_pow(nx, horizon - t - 1);
    const Index u_future = checked_pow(nu, horizon - t - 1);
    const Index prefixes = prog.nu_traj / u_future;
    for (Index r = 0; r < prog.nx_traj; ++r) {
      const Index ref = (r / x_future) * x_future;
      if (ref == r) continue;
      for (Index a = 0; a < prefixes; ++a) {
        auto row = eq.fresh();
        row.segment(r * prog.nu_traj + a * u_future, u_future).setOnes();
        row.segment(ref * prog.nu_traj + a * u_future, u_future).setConstant(-1.0);
        eq.add(row, 0.0);
      }
    }
  }
  // Q >= 0.
  for (Index i = 0; i < prog.nq; ++i) {
    auto row = ub.fresh();
    row[i] = -1.0;
    ub.add(row, 0.0);
  }

  auto budget = ub.fresh();
  const auto tests = test_vectors(inst.fc);
  for (int t = 0; t < horizon; ++t) {
    // Pair marginal at t as a linear map of Q: L (cells x n), target b.
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(cells, n);
    const Index xs = checked_pow(nx, horizon - 1 - t);
    const Index us = checked_pow(nu, horizon - 1 - t);
    for (Index r = 0; r < prog.nx_traj; ++r) {
      if (px[r] == 0.0) continue;
      const Index xt = (r / xs) % nx;
      for (Index c = 0; c < prog.nu_traj; ++c) l(xt * nu + (c / us) % nu, r * prog.nu_traj + c) += px[r];
    }
    const Eigen::VectorXd b = flat_pair(targets[static_cast<std::size_t>(t)]);
    const Index off = prog.aux_offset[static_cast<std::size_t>(t)];

    const bool norm_like = std::holds_alternative<TotalVariation>(inst.fc) || std::holds_alternative<BoundedLipschitz>(inst.fc);
    if (pinned) {
      if (norm_like) {
        for (Index i = 0; i < cells; ++i) eq.add(l.row(i), b[i]);
      } else {
        for (const auto& a : tests) eq.add(a.transpose() * l, a.dot(b));
      }
      continue;
    }
    std::visit(overloaded{[&](const TotalVariation&) {
                            for (Index i = 0; i < cells; ++i) {
                              Eigen::RowVectorXd row = l.row(i);
                              row[off + i] = -1.0;
                              ub.add(row, b[i]);
                              row = -l.row(i);
                              row[off + i] = -1.0;
                              ub.add(row, -b[i]);
                              budget[off + i] = 1.0;
                            }
                          },
                          [&](const BoundedLipschitz& bl) {
                            // v = out-flow - in-flow + alpha - beta.
                            Eigen::MatrixXd flow = l;
                            Index col = off;
                            const Index s = off + cells * (cells - 1) + 2 * cells;
                            auto dist_row = ub.fresh();
                            auto mass_row = ub.fresh();
                            for (Index i = 0; i < cells; ++i) {
                              for (Index j = 0; j < cells; ++j) {
                                if (i == j) continue;
                                flow(i, col) -= 1.0;
                                flow(j, col) += 1.0;
                                dist_row[col] = bl.metric(i, j);
                                ++col;
                              }
                            }
                            for (Index i = 0; i < cells; ++i) {
                              flow(i, col + i) -= 1.0;
                              flow(i, col + cells + i) += 1.0;
                              mass_row[col + i] = 1.0;
                              mass_row[col + cells + i] = 1.0;
                            }
                            for (Index i = 0; i < cells; ++i) eq.add(flow.row(i), b[i]);
                            for (Index k = off; k < s; ++k) {
                              auto row = ub.fresh();
                              row[k] = -1.0;
                              ub.add(row, 0.0);
                            }
                            dist_row[s] = -1.0;
                            mass_row[s] = -1.0;
                            ub.add(dist_row, 0.0);
                            ub.add(mass_row, 0.0);
                            budget[s] = 1.0;
                          },
                          [&](const auto&) {
                            for (const auto& a : tests) {
                              Eigen::RowVectorXd row = a.transpose() * l;
                              row[off] = -1.0;
                              ub.add(row, a.dot(b));
                              row = -(a.transpose() * l);
                              row[off] = -1.0;
                              ub.add(row, -a.dot(b));
                            }
                            // Keeps the auxiliary bounded when the class has no tests.
                            auto row = ub.fresh();
                            row[off] = -1.0;
                            ub.add(row, 0.0);
                            budget[off] = 1.0;
                          }},
               inst.fc);
  }
  if (!pinned) ub.add(budget / horizon, inst.delta);

  prog.poly.a_eq = eq.matrix();
  prog.poly.b_eq = eq.vector();
  prog.poly.g = ub.matrix();
  prog.poly.h = ub.vector();
  return prog;
}

// Strictly feasible point for delta > 0: a mixture of the target and the
// uniform kernel with slack-padded auxiliaries.
bool mixture_start(const RdInstance& inst, const RdProgram& prog, Eigen::VectorXd& w) {
  const int horizon = inst.source.horizon();
  const Index nx = inst.source.states();
  const Index nu = inst.target_policy.actions();
  const Index cells = nx * nu;
  const double eta = std::min(0.5, inst.delta / 4.0);
  const Eigen::MatrixXd q0 = (1.0 - eta) * joint_conditional(inst.target_policy).matrix().array() +
                             eta / static_cast<double>(prog.nu_traj);
  const DirectedKernel start_policy = disintegrate(q0, nx, nu, horizon);
  const StrategicMeasure m = assemble_strategic_measure(inst.source, start_policy);
  const auto targets = target_pairs(inst);

  double kappa = inst.delta / (8.0 * static_cast<double>(cells * cells + 4));
  for (int attempt = 0; attempt < 60; ++attempt, kappa *= 0.5) {
    w = Eigen::VectorXd::Zero(prog.poly.dim());
    for (Index r = 0; r < prog.nx_traj; ++r) w.segment(r * prog.nu_traj, prog.nu_traj) = q0.row(r).transpose();
    for (int t = 0; t < horizon; ++t) {
      const Eigen::VectorXd v = flat_pair(pair_marginal(m, t) - targets[static_cast<std::size_t>(t)]);
      const Index off = prog.aux_offset[static_cast<std::size_t>(t)];
      std::visit(overloaded{[&](const TotalVariation&) { w.segment(off, cells) = v.cwiseAbs().array() + kappa; },
                            [&](const BoundedLipschitz& bl) {
                              const Index pairs = cells * (cells - 1);
                              w.segment(off, pairs).setConstant(kappa);
                              w.segment(off + pairs, cells) = v.cwiseMax(0.0).array() + kappa;
                              w.segment(off + pairs + cells, cells) = (-v).cwiseMax(0.0).array() + kappa;
                              const double dist = kappa * bl.metric.sum();
                              const double mass = w.segment(off + pairs, 2 * cells).sum();
                              w[off + pairs + 2 * cells] = std::max(dist, mass) + kappa;
                            },
                            [&](const auto&) {
                              double s = 0.0;
                              for (const auto& a : test_vectors(inst.fc)) s = std::max(s, std::abs(a.dot(v)));
                              w[off] = s + kappa;
                            }},
                 inst.fc);
    }
    const double eq_res = prog.poly.a_eq.rows() > 0 ? (prog.poly.a_eq * w - prog.poly.b_eq).cwiseAbs().maxCoeff() : 0.0;
    if ((prog.poly.h - prog.poly.g * w).minCoeff() > 0.0 && eq_res < 1e-9) return true;
  }
  return false;
}

}  // namespace

void validate(const RdInstance& inst) {
  if (inst.source.horizon() != inst.target_policy.horizon()) throw std::invalid_argument("horizon mismatch");
  if (inst.source.states() != inst.target_policy.states()) throw std::invalid_argument("state alphabet mismatch");
  if (!(inst.delta >= 0.0) || !std::isfinite(inst.delta)) throw std::invalid_argument("delta must be finite and >= 0");
  validate(inst.fc, inst.source.states(), inst.target_policy.actions());
}

double feasibility_gap(const RdInstance& inst, const DirectedKernel& candidate) {
  validate(inst);
  if (candidate.horizon() != inst.source.horizon() || candidate.actions() != inst.target_policy.actions()) {
    throw std::invalid_argument("feasibility_gap: candidate shape mismatch");
  }
  return gap_against(target_pairs(inst), inst, candidate);
}

RdSolution solve_rate(const RdInstance& inst, const BarrierOptions& opts) {
  validate(inst);
  const int horizon = inst.source.horizon();
  const Index nx = inst.source.states();
  const Index nu = inst.target_policy.actions();
  const RdProgram prog = build_program(inst);

  Eigen::VectorXd start;
  std::vector<bool> implicit;
  std::string method = "log-barrier";
  if (!(inst.delta > 0.0 && mixture_start(inst, prog, start))) {
    RelativeInterior ri = relative_interior(prog.poly);
    start = std::move(ri.point);
    implicit = std::move(ri.implicit);
    method += " (LP phase I)";
  }

  InfoObjective obj;
  obj.p = state_law(inst.source).probs();
  obj.rows = prog.nx_traj;
  obj.cols = prog.nu_traj;
  obj.scale = horizon;
  obj.mask.assign(static_cast<std::size_t>(prog.nq), false);
  // The first nq inequality rows are Q >= 0.
  for (Index i = 0; i < prog.nq && !implicit.empty(); ++i) obj.mask[static_cast<std::size_t>(i)] = implicit[static_cast<std::size_t>(i)];

  SmoothConvex f;
  f.value = [&](const Eigen::VectorXd& w) { return obj.value(w.head(prog.nq)); };
  f.derivatives = [&](const Eigen::VectorXd& w, Eigen::VectorXd& g, Eigen::MatrixXd& h) {
    g.setZero();
    h.setZero();
    obj.derivatives(w.head(prog.nq), g.head(prog.nq), h.topLeftCorner(prog.nq, prog.nq));
  };
  const BarrierResult br = minimize_with_barrier(prog.poly, f, start, implicit, opts);

  Eigen::MatrixXd q(prog.nx_traj, prog.nu_traj);
  for (Index r = 0; r < prog.nx_traj; ++r) q.row(r) = br.x.segment(r * prog.nu_traj, prog.nu_traj).transpose();
  DirectedKernel argmin = disintegrate(q, nx, nu, horizon);
  const double rate = std::max(0.0, directed_information(inst.source, argmin).total / horizon);
  const double achieved = feasibility_gap(inst, argmin);
  return RdSolution{rate, std::move(argmin), achieved, SolverReport{br.iterations, br.gap, br.converged, method}};
}

BruteforceResult solve_rate_bruteforce(const RdInstance& inst, double grid_step) {
  validate(inst);
  if (!(grid_step > 0.0 && grid_step <= 1.0)) throw std::invalid_argument("grid_step must lie in (0, 1]");
  const int k = static_cast<int>(std::lround(1.0 / grid_step));
  if (std::abs(k * grid_step - 1.0) > 1e-9) throw std::invalid_argument("1 / grid_step must be an integer");
  const int horizon = inst.source.horizon();
  const Index nx = inst.source.states();
  const int nu = static_cast<int>(inst.target_policy.actions());

  // Compositions of k into nu parts, lexicographically increasing.
  std::vector<std::vector<int>> comps;
  std::vector<int> cur(static_cast<std::size_t>(nu), 0);
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == nu - 1) {
      cur[static_cast<std::size_t>(pos)] = left;
      comps.push_back(cur);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      cur[static_cast<std::size_t>(pos)] = v;
      self(self, pos + 1, left - v);
    }
  };
  rec(rec, 0, k);
  const Index nc = static_cast<Index>(comps.size());

  std::vector<Index> factor_rows;
  Index total_rows = 0;
  for (int t = 0; t < horizon; ++t) {
    factor_rows.push_back(checked_pow(nx, t + 1) * checked_pow(nu, t));
    total_rows += factor_rows.back();
  }
  Index points = 1;
  for (Index r = 0; r < total_rows; ++r) {
    if (points > kBruteforceGridLimit / nc) throw GuardError("solve_rate_bruteforce: grid exceeds 1e7 points");
    points *= nc;
  }

  std::map<std::vector<int>, Index> lookup;
  for (Index c = 0; c < nc; ++c) lookup[comps[static_cast<std::size_t>(c)]] = c;
  // neighbour[c][a * nu + b]: composition with one unit moved from a to b.
  std::vector<std::vector<Index>> neighbour(static_cast<std::size_t>(nc), std::vector<Index>(static_cast<std::size_t>(nu * nu), -1));
  for (Index c = 0; c < nc; ++c) {
    for (int a = 0; a < nu; ++a) {
      for (int b = 0; b < nu; ++b) {
        auto comp = comps[static_cast<std::size_t>(c)];
        if (a == b || comp[static_cast<std::size_t>(a)] == 0) continue;
        --comp[static_cast<std::size_t>(a)];
        ++comp[static_cast<std::size_t>(b)];
        neighbour[static_cast<std::size_t>(c)][static_cast<std::size_t>(a * nu + b)] = lookup.at(comp);
      }
    }
  }

  const auto targets = target_pairs(inst);
  auto kernel_of = [&](const std::vector<Index>& digits) {
    std::vector<MarkovKernel> factors;
    Index row = 0;
    for (int t = 0; t < horizon; ++t) {
      Eigen::MatrixXd f(factor_rows[static_cast<std::size_t>(t)], nu);
      for (Index r = 0; r < f.rows(); ++r, ++row) {
        const auto& comp = comps[static_cast<std::size_t>(digits[static_cast<std::size_t>(row)])];
        for (int a = 0; a < nu; ++a) f(r, a) = static_cast<double>(comp[static_cast<std::size_t>(a)]) / k;
      }
      factors.emplace_back(std::move(f));
    }
    return DirectedKernel(nx, nu, std::move(factors));
  };

  std::vector<double> values(static_cast<std::size_t>(points), std::numeric_limits<double>::quiet_NaN());
  std::vector<Index> digits(static_cast<std::size_t>(total_rows), 0);
  double best = kInf;
  Index feasible = 0;
  for (Index p = 0; p < points; ++p) {
    Index code = p;
    for (Index r = total_rows; r-- > 0;) {
      digits[static_cast<std::size_t>(r)] = code % nc;
      code /= nc;
    }
    const DirectedKernel cand = kernel_of(digits);
    if (gap_against(targets, inst, cand) > inst.delta + 1e-12) continue;
    const double v = directed_information(inst.source, cand).total / horizon;
    values[static_cast<std::size_t>(p)] = v;
    best = std::min(best, v);
    ++feasible;
  }
  if (feasible == 0) throw NumericError("solve_rate_bruteforce: no feasible grid point");

  Index argmin = -1;
  double modulus = 0.0;
  for (Index p = 0; p < points; ++p) {
    const double v = values[static_cast<std::size_t>(p)];
    if (std::isnan(v)) continue;
    if (argmin < 0 && v <= best + 1e-12) argmin = p;
    Index code = p, stride = 1;
    for (Index r = total_rows; r-- > 0; stride *= nc) {
      const Index d = code % nc;
      code /= nc;
      for (Index nb : neighbour[static_cast<std::size_t>(d)]) {
        if (nb < 0) continue;
        const double w = values[static_cast<std::size_t>(p + (nb - d) * stride)];
        if (!std::isnan(w)) modulus = std::max(modulus, std::abs(w - v));
      }
    }
  }
  Index code = argmin;
  for (Index r = total_rows; r-- > 0;) {
    digits[static_cast<std::size_t>(r)] = code % nc;
    code /= nc;
  }
  return BruteforceResult{best, modulus, kernel_of(digits), points, feasible};
}

bool satisfies_uniform_lipschitz(const FunctionClass& fc, Index states, Index actions,
                                 const Eigen::MatrixXd& action_metric) {
  validate(fc, states, actions);
  if (action_metric.rows() != actions) throw std::invalid_argument("action metric has wrong size");
  validate_metric(action_metric);
  for (Index x = 0; x < states; ++x) {
    for (Index u = 0; u < actions; ++u) {
      for (Index v = u + 1; v < actions; ++v) {
        Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(states, actions);
        delta(x, u) = 1.0;
        delta(x, v) = -1.0;
        if (seminorm(SignedMeasureView(delta), fc) > action_metric(u, v) + 1e-12) return false;
      }
    }
  }
  return true;
}

double kop_bound(const Distribution& mu, const MarkovKernel& policy, const Eigen::MatrixXd& d, double delta,
                 const BarrierOptions& opts) {
  if (!(delta >= 0.0)) throw std::invalid_argument("kop_bound: delta must be >= 0");
  if (policy.inputs() != mu.size() || d.rows() != policy.outputs()) throw std::invalid_argument("kop_bound: shape mismatch");
  validate_metric(d);
  // A metric separates points, so delta = 0 forces the identity test channel
  // wherever U has mass.
  if (delta == 0.0) return mutual_information(mu, policy);

  const Index nx = mu.size();
  const Index nu = policy.outputs();
  const Index n = nu * nu;
  const Eigen::MatrixXd& pi = policy.matrix();
  const Eigen::VectorXd pu = pi.transpose() * mu.probs();

  Polyhedron poly;
  poly.a_eq = Eigen::MatrixXd::Zero(nu, n);
  poly.b_eq = Eigen::VectorXd::Ones(nu);
  poly.g = Eigen::MatrixXd::Zero(n + 1, n);
  poly.h = Eigen::VectorXd::Zero(n + 1);
  for (Index u = 0; u < nu; ++u) {
    for (Index v = 0; v < nu; ++v) {
      poly.a_eq(u, u * nu + v) = 1.0;
      poly.g(u * nu + v, u * nu + v) = -1.0;
      poly.g(n, u * nu + v) = pu[u] * d(u, v);
    }
  }
  poly.h[n] = delta;

  const double diameter = d.maxCoeff();
  const double eta = std::min(0.5, delta / (2.0 * diameter));
  Eigen::VectorXd start(n);
  for (Index u = 0; u < nu; ++u) {
    for (Index v = 0; v < nu; ++v) start[u * nu + v] = (u == v ? 1.0 - eta : 0.0) + eta / static_cast<double>(nu);
  }

  InfoObjective obj;
  obj.p = mu.probs();
  obj.rows = nx;
  obj.cols = nu;
  obj.mask.assign(static_cast<std::size_t>(nx * nu), false);
  auto to_k = [&](const Eigen::VectorXd& w) {
    Eigen::VectorXd k(nx * nu);
    for (Index x = 0; x < nx; ++x) {
      for (Index v = 0; v < nu; ++v) {
        double s = 0.0;
        for (Index u = 0; u < nu; ++u) s += pi(x, u) * w[u * nu + v];
        k[x * nu + v] = s;
      }
    }
    return k;
  };
  // Chain rule through the linear map K = pi W.
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(nx * nu, n);
  for (Index x = 0; x < nx; ++x) {
    for (Index u = 0; u < nu; ++u) {
      for (Index v = 0; v < nu; ++v) jac(x * nu + v, u * nu + v) = pi(x, u);
    }
  }
  SmoothConvex f;
  f.value = [&](const Eigen::VectorXd& w) { return obj.value(to_k(w)); };
  f.derivatives = [&](const Eigen::VectorXd& w, Eigen::VectorXd& g, Eigen::MatrixXd& h) {
    Eigen::VectorXd gk(nx * nu);
    Eigen::MatrixXd hk(nx * nu, nx * nu);
    obj.derivatives(to_k(w), gk, hk);
    g = jac.transpose() * gk;
    h = jac.transpose() * hk * jac;
  };
  const BarrierResult br = minimize_with_barrier(poly, f, start, {}, opts);
  Eigen::MatrixXd w(nu, nu);
  for (Index u = 0; u < nu; ++u) w.row(u) = br.x.segment(u * nu, nu).transpose().cwiseMax(0.0);
  return std::max(0.0, mutual_information(mu.probs(), normalize_rows(pi * normalize_rows(w))));
}

}  // namespace seqcoord
