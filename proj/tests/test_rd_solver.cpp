#include <cmath>

#include "doctest.h"
#include "seqcoord/errors.hpp"
#include "seqcoord/oracles.hpp"
#include "seqcoord/rd_solver.hpp"

using namespace seqcoord;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

RdInstance single_step(const Eigen::VectorXd& mu, const Eigen::MatrixXd& pi, FunctionClass fc, double delta) {
  return RdInstance{SourceLaw::iid(Distribution(mu), 1), DirectedKernel::memoryless(MarkovKernel(pi), 1), std::move(fc), delta};
}

// Grid search over 2x2 test channels W, with E d(U, U_hat) <= delta.
double kop_grid_oracle(const Eigen::VectorXd& mu, const Eigen::MatrixXd& pi, const Eigen::MatrixXd& d, double delta) {
  const Eigen::RowVectorXd pu = mu.transpose() * pi;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      const Eigen::MatrixXd w = mat2(1.0 - 0.01 * i, 0.01 * i, 0.01 * j, 1.0 - 0.01 * j);
      const double cost = pu[0] * w(0, 1) * d(0, 1) + pu[1] * w(1, 0) * d(1, 0);
      if (cost > delta + 1e-12) continue;
      best = std::min(best, oracle::mutual_information_double_sum(mu, pi * w));
    }
  }
  return best;
}

// I(X; sqrt(s) X + Z) for equiprobable X = +-1, by trapezoid quadrature.
double antipodal_information(double s) {
  const double a = std::sqrt(s), lo = -a - 12.0, hi = a + 12.0;
  const int n = 40000;
  const double h = (hi - lo) / n;
  const double c = 1.0 / std::sqrt(2.0 * M_PI);
  double hy = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double y = lo + h * k;
    const double p = 0.5 * c * (std::exp(-0.5 * (y - a) * (y - a)) + std::exp(-0.5 * (y + a) * (y + a)));
    const double w = (k == 0 || k == n) ? 0.5 : 1.0;
    if (p > 0.0) hy -= w * h * p * std::log(p);
  }
  return hy - 0.5 * std::log(2.0 * M_PI * M_E);
}

}  // namespace

TEST_CASE("feasibility gap examples") {
  const RdInstance inst = single_step(vec({0.5, 0.5}), Eigen::MatrixXd::Identity(2, 2), TotalVariation{}, 0.0);
  CHECK(std::abs(feasibility_gap(inst, inst.target_policy)) < 1e-15);
  const DirectedKernel blind = DirectedKernel::memoryless(MarkovKernel(mat2(0.5, 0.5, 0.5, 0.5)), 1);
  CHECK(feasibility_gap(inst, blind) == doctest::Approx(1.0));
  const DirectedKernel wrong = DirectedKernel::memoryless(MarkovKernel(Eigen::MatrixXd::Identity(2, 3)), 1);
  CHECK_THROWS_AS(feasibility_gap(inst, wrong), std::invalid_argument);
}

TEST_CASE("instance validation") {
  CHECK_THROWS_AS(solve_rate(single_step(vec({0.5, 0.5}), mat2(0.5, 0.5, 0.5, 0.5), TotalVariation{}, -0.1)),
                  std::invalid_argument);
  const RdInstance mismatch{SourceLaw::iid(Distribution(vec({0.5, 0.5})), 2),
                            DirectedKernel::memoryless(MarkovKernel(mat2(0.5, 0.5, 0.5, 0.5)), 1), TotalVariation{}, 0.1};
  CHECK_THROWS_AS(solve_rate(mismatch), std::invalid_argument);
}

TEST_CASE("a budget covering the full diameter gives rate zero") {
  const RdInstance inst = single_step(vec({0.3, 0.7}), mat2(0.9, 0.1, 0.2, 0.8), TotalVariation{}, 2.0);
  const RdSolution sol = solve_rate(inst);
  CHECK(sol.rate < 1e-6);
  const Eigen::MatrixXd k = sol.argmin_policy.factor(0).matrix();
  CHECK((k.row(0) - k.row(1)).lpNorm<Eigen::Infinity>() < 1e-3);
  CHECK(sol.achieved_constraint <= 2.0 + 1e-8);
}

TEST_CASE("delta zero pins the target information") {
  const Eigen::VectorXd mu = vec({0.3, 0.7});
  const Eigen::MatrixXd pi = mat2(0.9, 0.1, 0.2, 0.8);
  const double info = oracle::mutual_information_double_sum(mu, pi);
  CHECK(solve_rate(single_step(mu, pi, TotalVariation{}, 0.0)).rate == doctest::Approx(info).epsilon(1e-6));
  const Eigen::MatrixXd metric = oracle::line_metric(vec({0.0, 1.0, 2.5, 3.0}));
  CHECK(solve_rate(single_step(mu, pi, BoundedLipschitz{metric}, 0.0)).rate == doctest::Approx(info).epsilon(1e-6));
}

TEST_CASE("solver agrees with the grid oracle on a small instance") {
  const RdInstance inst = single_step(vec({0.4, 0.6}), mat2(0.85, 0.15, 0.25, 0.75), TotalVariation{}, 0.1);
  const double r = solve_rate(inst).rate;
  const BruteforceResult bf = solve_rate_bruteforce(inst, 0.01);
  CHECK(bf.feasible_points > 0);
  CHECK(bf.grid_points == 101 * 101);
  CHECK(r <= bf.rate + 1e-6);
  CHECK(bf.rate - r <= 5e-3);
}

TEST_CASE("brute force guards") {
  const RdInstance inst = single_step(vec({0.4, 0.6}), mat2(0.85, 0.15, 0.25, 0.75), TotalVariation{}, 0.1);
  CHECK_THROWS_AS(solve_rate_bruteforce(inst, 0.3), std::invalid_argument);
  SplitMix64 rng(31);
  const RdInstance big{oracle::random_source(rng, 2, 2), oracle::random_policy(rng, 2, 3, 2), TotalVariation{}, 0.1};
  CHECK_THROWS_AS(solve_rate_bruteforce(big, 0.01), GuardError);
}

TEST_CASE("solve_rate refuses oversized programs") {
  const Eigen::MatrixXd pi = Eigen::MatrixXd::Constant(3, 3, 1.0 / 3.0);
  const RdInstance inst{SourceLaw::iid(Distribution::uniform(3), 4), DirectedKernel::memoryless(MarkovKernel(pi), 4),
                        TotalVariation{}, 0.1};
  CHECK_THROWS_AS(solve_rate(inst), GuardError);
}

TEST_CASE("property: rate is monotone, convex, feasible and below the target information") {
  SplitMix64 rng(32);
  for (int i = 0; i < 8; ++i) {
    const int horizon = oracle::uniform_int(rng, 1, 2);
    const SourceLaw src = oracle::random_source(rng, 2, horizon, 5);
    const DirectedKernel pol = oracle::random_policy(rng, 2, 2, horizon, 5);
    const double cap = directed_information(src, pol).total / horizon;
    std::vector<double> rates;
    const std::vector<double> deltas{0.0, 0.1, 0.2, 0.3, 0.4};
    for (double d : deltas) {
      const RdInstance inst{src, pol, TotalVariation{}, d};
      const RdSolution sol = solve_rate(inst);
      CHECK(sol.rate >= -1e-9);
      CHECK(sol.rate <= cap + 1e-6);
      CHECK(sol.achieved_constraint <= d + 1e-8);
      CHECK(std::abs(feasibility_gap(inst, sol.argmin_policy) - sol.achieved_constraint) < 1e-12);
      rates.push_back(sol.rate);
    }
    // At delta = 0 only the per-time pair marginals are pinned, so for T > 1
    // a policy with less directed information can share them.
    if (horizon == 1) CHECK(std::abs(rates[0] - cap) < 1e-5);
    for (std::size_t k = 1; k < rates.size(); ++k) CHECK(rates[k] <= rates[k - 1] + 1e-6);
    for (std::size_t k = 1; k + 1 < rates.size(); ++k) CHECK(rates[k] <= 0.5 * (rates[k - 1] + rates[k + 1]) + 1e-6);
  }
}

TEST_CASE("uniform Lipschitz premise") {
  CHECK(satisfies_uniform_lipschitz(TotalVariation{}, 2, 2, 2.0 * discrete_metric(2)));
  CHECK_FALSE(satisfies_uniform_lipschitz(TotalVariation{}, 2, 2, discrete_metric(2)));
  CHECK_THROWS_AS(satisfies_uniform_lipschitz(TotalVariation{}, 2, 2, discrete_metric(3)), std::invalid_argument);
}

TEST_CASE("test-channel bound examples") {
  const Eigen::VectorXd mu = vec({0.5, 0.5});
  const Eigen::MatrixXd pi = mat2(0.9, 0.1, 0.1, 0.9);
  const Eigen::MatrixXd d = discrete_metric(2);
  CHECK(kop_bound(Distribution(mu), MarkovKernel(pi), d, 0.0) ==
        doctest::Approx(oracle::mutual_information_double_sum(mu, pi)).epsilon(1e-6));
  CHECK(kop_bound(Distribution(mu), MarkovKernel(pi), d, 1.0) < 1e-6);
  SplitMix64 rng(33);
  for (int i = 0; i < 5; ++i) {
    const Eigen::VectorXd m = oracle::grid_distribution(rng, 2, 100, 5);
    const Eigen::MatrixXd k = oracle::grid_kernel(rng, 2, 2, 100, 5);
    const double v = kop_bound(Distribution(m), MarkovKernel(k), d, 0.2);
    const double grid = kop_grid_oracle(m, k, d, 0.2);
    CHECK(v <= grid + 1e-6);
    CHECK(grid - v <= 5e-3);
  }
}

TEST_CASE("average-power AWGN capacity") {
  CHECK(awgn_capacity_avg(0.0) == 0.0);
  CHECK(awgn_capacity_avg(3.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(awgn_capacity_avg(std::exp(2.0) - 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(awgn_capacity_avg(-1.0), std::invalid_argument);
}

TEST_CASE("peak-power AWGN capacity") {
  const PeakCapacity z = awgn_capacity_peak(0.0);
  CHECK(std::abs(z.value) < 1e-9);
  double prev = 0.0;
  for (double s : {0.25, 1.0, 4.0}) {
    const PeakCapacity pk = awgn_capacity_peak(s);
    CHECK(pk.value <= awgn_capacity_avg(s) + 1e-9);
    CHECK(pk.value >= prev - 1e-9);
    // Blahut-Arimoto converges slowly towards sparse optimal inputs; the value
    // is the information of an actual input law either way.
    CHECK(pk.ba_gap <= 1e-4);
    prev = pk.value;
  }
  // Equiprobable antipodal inputs are admissible, so their information is a
  // lower bound on the continuous capacity; the binned value may sit slightly
  // below it by the binning error.
  const PeakCapacity one = awgn_capacity_peak(1.0);
  CHECK(one.value >= antipodal_information(1.0) - one.bin_error - 1e-4);
  CHECK(antipodal_information(1.0) == doctest::Approx(0.3369).epsilon(1e-3));
}
