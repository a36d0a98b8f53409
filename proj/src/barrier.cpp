#include "seqcoord/barrier.hpp"

#include <cmath>
#include <limits>

#include "seqcoord/errors.hpp"
#include "seqcoord/linprog.hpp"

namespace seqcoord {

namespace {

constexpr double kStrictTol = 1e-9;
constexpr int kMaxCenteringSteps = 500;

Eigen::MatrixXd null_space(const Eigen::MatrixXd& a, Index n) {
  if (a.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a.transpose());
  qr.setThreshold(1e-10);
  const Index rank = qr.rank();
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return q.rightCols(n - rank);
}

}  // namespace

RelativeInterior relative_interior(const Polyhedron& poly) {
  const Index n = poly.dim();
  const Index m = poly.g.rows();
  const Index me = poly.a_eq.rows();
  RelativeInterior out;
  out.implicit.assign(static_cast<std::size_t>(m), false);

  std::vector<bool> strict(static_cast<std::size_t>(m), false);
  std::vector<Eigen::VectorXd> points;
  while (true) {
    std::vector<Index> cand;
    for (Index i = 0; i < m; ++i) {
      if (!strict[static_cast<std::size_t>(i)]) cand.push_back(i);
    }
    const Index c = static_cast<Index>(cand.size());
    LinearProgram lp;
    lp.cost = Eigen::VectorXd::Zero(n + c);
    lp.cost.tail(c).setConstant(-1.0);
    lp.free_vars.assign(static_cast<std::size_t>(n + c), false);
    for (Index j = 0; j < n; ++j) lp.free_vars[static_cast<std::size_t>(j)] = true;
    lp.a_ub = Eigen::MatrixXd::Zero(m + c, n + c);
    lp.b_ub.resize(m + c);
    lp.a_ub.topLeftCorner(m, n) = poly.g;
    lp.b_ub.head(m) = poly.h;
    for (Index k = 0; k < c; ++k) {
      lp.a_ub(cand[static_cast<std::size_t>(k)], n + k) = 1.0;
      lp.a_ub(m + k, n + k) = 1.0;
      lp.b_ub[m + k] = 1.0;
    }
    if (me > 0) {
      lp.a_eq = Eigen::MatrixXd::Zero(me, n + c);
      lp.a_eq.leftCols(n) = poly.a_eq;
      lp.b_eq = poly.b_eq;
    }
    const LpResult r = solve_lp(lp);
    if (r.status == LpStatus::infeasible) throw NumericError("relative_interior: feasible set is empty");
    if (r.status != LpStatus::optimal) throw NumericError("relative_interior: LP failed");
    points.push_back(r.x.head(n));
    bool progress = false;
    for (Index k = 0; k < c; ++k) {
      if (r.x[n + k] > kStrictTol) {
        strict[static_cast<std::size_t>(cand[static_cast<std::size_t>(k)])] = true;
        progress = true;
      }
    }
    if (!progress || c == 0) break;
  }

  out.point = Eigen::VectorXd::Zero(n);
  for (const auto& p : points) out.point += p;
  out.point /= static_cast<double>(points.size());
  for (Index i = 0; i < m; ++i) out.implicit[static_cast<std::size_t>(i)] = !strict[static_cast<std::size_t>(i)];
  return out;
}

BarrierResult minimize_with_barrier(const Polyhedron& poly, const SmoothConvex& f, const Eigen::VectorXd& start,
                                    const std::vector<bool>& implicit, const BarrierOptions& opts) {
  const Index n = poly.dim();
  std::vector<Index> active;
  std::vector<Index> pinned;
  for (Index i = 0; i < poly.g.rows(); ++i) {
    (implicit.empty() || !implicit[static_cast<std::size_t>(i)] ? active : pinned).push_back(i);
  }
  const Index m = static_cast<Index>(active.size());
  Eigen::MatrixXd g(m, n);
  Eigen::VectorXd h(m);
  for (Index k = 0; k < m; ++k) {
    g.row(k) = poly.g.row(active[static_cast<std::size_t>(k)]);
    h[k] = poly.h[active[static_cast<std::size_t>(k)]];
  }
  Eigen::MatrixXd a(poly.a_eq.rows() + static_cast<Index>(pinned.size()), n);
  if (poly.a_eq.rows() > 0) a.topRows(poly.a_eq.rows()) = poly.a_eq;
  for (std::size_t k = 0; k < pinned.size(); ++k) a.row(poly.a_eq.rows() + static_cast<Index>(k)) = poly.g.row(pinned[k]);
  const Eigen::MatrixXd z = null_space(a, n);

  Eigen::VectorXd w = start;
  if ((h - g * w).minCoeff() <= 0.0 && m > 0) throw NumericError("barrier: start is not strictly feasible");

  auto merit = [&](const Eigen::VectorXd& x, double t) {
    const Eigen::VectorXd s = h - g * x;
    if (m > 0 && s.minCoeff() <= 0.0) return std::numeric_limits<double>::infinity();
    const double fv = f.value(x);
    if (!std::isfinite(fv)) return std::numeric_limits<double>::infinity();
    return t * fv - s.array().log().sum();
  };

  BarrierResult res;
  double t = opts.t0;
  Eigen::VectorXd grad(n);
  Eigen::MatrixXd hess(n, n);
  while (true) {
    // Centering at the current t.
    for (int inner = 0; inner < kMaxCenteringSteps && res.iterations < opts.max_iterations; ++inner) {
      if (z.cols() == 0) break;
      f.derivatives(w, grad, hess);
      const Eigen::VectorXd s = h - g * w;
      const Eigen::VectorXd inv = s.cwiseInverse();
      Eigen::VectorXd gfull = t * grad + g.transpose() * inv;
      Eigen::MatrixXd hfull = t * hess;
      hfull.noalias() += g.transpose() * inv.cwiseAbs2().asDiagonal() * g;
      const Eigen::VectorXd gz = z.transpose() * gfull;
      Eigen::MatrixXd hz = z.transpose() * hfull * z;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(hz);
      Eigen::VectorXd dz = ldlt.solve(-gz);
      if (ldlt.info() != Eigen::Success || !dz.allFinite() || gz.dot(dz) > 0.0) {
        hz.diagonal().array() += 1e-12 * std::max(1.0, hz.diagonal().cwiseAbs().maxCoeff());
        dz = hz.colPivHouseholderQr().solve(-gz);
        if (!dz.allFinite()) throw NumericError("barrier: singular Newton system");
      }
      ++res.iterations;
      const double decrement = -gz.dot(dz);
      if (decrement / 2.0 <= opts.newton_tol) break;
      const Eigen::VectorXd dw = z * dz;
      const double f0 = merit(w, t);
      double step = 1.0;
      bool moved = false;
      while (step > 1e-12) {
        const Eigen::VectorXd trial = w + step * dw;
        const double f1 = merit(trial, t);
        if (std::isfinite(f1) && f1 < f0 && f1 <= f0 - 0.25 * step * decrement) {
          w = trial;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;  // no representable decrease left at this t
    }
    res.gap = m > 0 ? static_cast<double>(m) / t : 0.0;
    if (res.gap <= opts.gap_tol || res.iterations >= opts.max_iterations) break;
    t *= opts.growth;
  }
  res.converged = res.gap <= opts.gap_tol && res.iterations < opts.max_iterations;
  res.x = w;
  res.objective = f.value(w);
  return res;
}

}  // namespace seqcoord
