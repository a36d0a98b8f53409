#include "seqcoord/linprog.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace seqcoord {

namespace {

using Eigen::Index;

constexpr double kPriceTol = 1e-10;
constexpr double kPivotTol = 1e-10;
constexpr int kDegenerateRunBeforeBland = 30;

struct Simplex {
  Eigen::MatrixXd tab;  // constraint rows; last column is the right-hand side
  Eigen::RowVectorXd red;  // reduced costs; last entry is -objective
  std::vector<Index> basis;
  int iterations = 0;

  Index rhs() const { return tab.cols() - 1; }

  void price(const Eigen::VectorXd& cost) {
    red = Eigen::RowVectorXd::Zero(tab.cols());
    red.head(cost.size()) = cost.transpose();
    for (Index i = 0; i < tab.rows(); ++i) {
      const double cb = cost[basis[static_cast<std::size_t>(i)]];
      if (cb != 0.0) red -= cb * tab.row(i);
    }
  }

  void pivot(Index r, Index q) {
    const Eigen::RowVectorXd prow = tab.row(r) / tab(r, q);
    const Eigen::VectorXd col = tab.col(q);
    tab.noalias() -= col * prow;
    tab.row(r) = prow;
    red -= red[q] * prow;
    tab = (tab.array().abs() < 1e-15).select(0.0, tab);
    basis[static_cast<std::size_t>(r)] = q;
  }

  LpStatus run(const std::vector<bool>& allowed, int max_iterations) {
    bool bland = false;
    int degenerate_run = 0;
    while (iterations < max_iterations) {
      Index q = -1;
      double best = -kPriceTol;
      for (Index j = 0; j < rhs(); ++j) {
        if (!allowed[static_cast<std::size_t>(j)] || red[j] >= -kPriceTol) continue;
        if (bland) {
          q = j;
          break;
        }
        if (red[j] < best) {
          best = red[j];
          q = j;
        }
      }
      if (q < 0) return LpStatus::optimal;

      Index r = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < tab.rows(); ++i) {
        const double a = tab(i, q);
        if (a <= kPivotTol) continue;
        const double v = std::max(tab(i, rhs()), 0.0) / a;
        if (v < ratio - 1e-14 ||
            (v <= ratio + 1e-14 && r >= 0 && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(r)])) {
          ratio = v;
          r = i;
        }
      }
      if (r < 0) return LpStatus::unbounded;
      if (ratio <= 1e-12) {
        if (++degenerate_run > kDegenerateRunBeforeBland) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }
      pivot(r, q);
      ++iterations;
    }
    return LpStatus::iteration_limit;
  }
};

Index block_rows(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) { return std::max(a.rows(), b.size()); }

}  // namespace

LpResult solve_lp(const LinearProgram& lp, int max_iterations) {
  const Index n = lp.cost.size();
  const Index m_ub = block_rows(lp.a_ub, lp.b_ub);
  const Index m_eq = block_rows(lp.a_eq, lp.b_eq);
  if ((m_ub > 0 && (lp.a_ub.rows() != m_ub || lp.a_ub.cols() != n || lp.b_ub.size() != m_ub)) ||
      (m_eq > 0 && (lp.a_eq.rows() != m_eq || lp.a_eq.cols() != n || lp.b_eq.size() != m_eq)) ||
      (!lp.free_vars.empty() && static_cast<Index>(lp.free_vars.size()) != n)) {
    throw std::invalid_argument("solve_lp: inconsistent dimensions");
  }

  // Free variables are split as x = x+ - x-, the negative parts appended.
  std::vector<Index> neg_col(static_cast<std::size_t>(n), -1);
  Index n_struct = n;
  for (Index j = 0; j < n; ++j) {
    if (!lp.free_vars.empty() && lp.free_vars[static_cast<std::size_t>(j)]) neg_col[static_cast<std::size_t>(j)] = n_struct++;
  }
  const Index m = m_ub + m_eq;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, n_struct + m_ub);
  Eigen::VectorXd b(m);
  for (Index i = 0; i < m; ++i) {
    const bool ub = i < m_ub;
    const auto row = ub ? lp.a_ub.row(i) : lp.a_eq.row(i - m_ub);
    a.row(i).head(n) = row;
    for (Index j = 0; j < n; ++j) {
      if (neg_col[static_cast<std::size_t>(j)] >= 0) a(i, neg_col[static_cast<std::size_t>(j)]) = -row[j];
    }
    if (ub) a(i, n_struct + i) = 1.0;
    b[i] = ub ? lp.b_ub[i] : lp.b_eq[i - m_ub];
  }

  std::vector<bool> needs_art(static_cast<std::size_t>(m), false);
  Index n_art = 0;
  for (Index i = 0; i < m; ++i) {
    if (b[i] < 0.0) {
      a.row(i) *= -1.0;
      b[i] = -b[i];
    }
    const bool slack_basic = i < m_ub && a(i, n_struct + i) > 0.0;
    if (!slack_basic) {
      needs_art[static_cast<std::size_t>(i)] = true;
      ++n_art;
    }
  }

  const Index first_art = n_struct + m_ub;
  const Index total = first_art + n_art;
  Simplex sx;
  sx.tab = Eigen::MatrixXd::Zero(m, total + 1);
  sx.tab.leftCols(first_art) = a;
  sx.tab.col(total) = b;
  sx.basis.resize(static_cast<std::size_t>(m));
  Index art = first_art;
  for (Index i = 0; i < m; ++i) {
    if (needs_art[static_cast<std::size_t>(i)]) {
      sx.tab(i, art) = 1.0;
      sx.basis[static_cast<std::size_t>(i)] = art++;
    } else {
      sx.basis[static_cast<std::size_t>(i)] = n_struct + i;
    }
  }

  LpResult result;
  std::vector<bool> allowed(static_cast<std::size_t>(total), true);
  if (n_art > 0) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(total);
    phase1.tail(n_art).setOnes();
    sx.price(phase1);
    const LpStatus st = sx.run(allowed, max_iterations);
    if (st == LpStatus::iteration_limit) {
      result.status = st;
      result.iterations = sx.iterations;
      return result;
    }
    const double infeas = -sx.red[total];
    const double scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
    if (infeas > 1e-9 * scale) {
      result.status = LpStatus::infeasible;
      result.iterations = sx.iterations;
      return result;
    }
    // Drive zero-level artificials out of the basis; rows where that is
    // impossible are linearly dependent and dropped.
    std::vector<Index> keep;
    for (Index i = 0; i < sx.tab.rows(); ++i) {
      if (sx.basis[static_cast<std::size_t>(i)] < first_art) {
        keep.push_back(i);
        continue;
      }
      Index q = -1;
      double best = 1e-9;
      for (Index j = 0; j < first_art; ++j) {
        if (std::abs(sx.tab(i, j)) > best) {
          best = std::abs(sx.tab(i, j));
          q = j;
        }
      }
      if (q >= 0) {
        sx.pivot(i, q);
        keep.push_back(i);
      }
    }
    if (static_cast<Index>(keep.size()) != sx.tab.rows()) {
      Eigen::MatrixXd t2(static_cast<Index>(keep.size()), sx.tab.cols());
      std::vector<Index> b2;
      for (std::size_t k = 0; k < keep.size(); ++k) {
        t2.row(static_cast<Index>(k)) = sx.tab.row(keep[k]);
        b2.push_back(sx.basis[static_cast<std::size_t>(keep[k])]);
      }
      sx.tab = std::move(t2);
      sx.basis = std::move(b2);
    }
    for (Index j = first_art; j < total; ++j) allowed[static_cast<std::size_t>(j)] = false;
  }

  Eigen::VectorXd cost = Eigen::VectorXd::Zero(total);
  cost.head(n) = lp.cost;
  for (Index j = 0; j < n; ++j) {
    if (neg_col[static_cast<std::size_t>(j)] >= 0) cost[neg_col[static_cast<std::size_t>(j)]] = -lp.cost[j];
  }
  sx.price(cost);
  result.status = sx.run(allowed, max_iterations);
  result.iterations = sx.iterations;

  Eigen::VectorXd vals = Eigen::VectorXd::Zero(total);
  for (Index i = 0; i < sx.tab.rows(); ++i) vals[sx.basis[static_cast<std::size_t>(i)]] = sx.tab(i, total);
  result.x = vals.head(n);
  for (Index j = 0; j < n; ++j) {
    if (neg_col[static_cast<std::size_t>(j)] >= 0) result.x[j] -= vals[neg_col[static_cast<std::size_t>(j)]];
  }
  result.objective = lp.cost.dot(result.x);
  return result;
}

}  // namespace seqcoord
