#include <cmath>

#include "doctest.h"
#include "seqcoord/errors.hpp"
#include "seqcoord/oracles.hpp"
#include "seqcoord/seminorms.hpp"

using namespace seqcoord;

namespace {

Eigen::MatrixXd row_table(const Eigen::VectorXd& v, Index rows, Index cols) {
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), rows, cols);
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
  Eigen::VectorXd out(m.size());
  for (Index x = 0; x < m.rows(); ++x)
    for (Index u = 0; u < m.cols(); ++u) out[x * m.cols() + u] = m(x, u);
  return out;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::vector<FunctionClass> all_classes(SplitMix64& rng, Index nx, Index nu) {
  FiniteTable ft;
  for (int k = 0; k < 4; ++k) {
    Eigen::MatrixXd f(nx, nu);
    for (Index c = 0; c < nx * nu; ++c) f(c / nu, c % nu) = 0.05 * oracle::uniform_int(rng, -20, 20);
    ft.functions.push_back(f);
  }
  Eigen::MatrixXd cost(nx, nu);
  for (Index c = 0; c < nx * nu; ++c) cost(c / nu, c % nu) = 0.5 * oracle::uniform_int(rng, -4, 4);
  Eigen::VectorXd pts(nx * nu);
  for (Index c = 0; c < pts.size(); ++c) pts[c] = 0.3 * c + 0.1 * oracle::uniform_int(rng, 0, 2);
  return {TotalVariation{}, ft, CostLevelSets{cost}, BoundedLipschitz{oracle::line_metric(pts)}};
}

}  // namespace

TEST_CASE("signed measure view requires zero mass") {
  Eigen::MatrixXd d(1, 2);
  d << 0.5, -0.4;
  CHECK_THROWS(SignedMeasureView{d});
  d << 0.5, -0.5;
  CHECK_NOTHROW(SignedMeasureView{d});
}

TEST_CASE("function class validation") {
  Eigen::MatrixXd bad(2, 2);
  bad << 0.0, 1.5, 0.0, 0.0;
  CHECK_THROWS(validate(FunctionClass{FiniteTable{{bad}}}, 2, 2));
  CHECK_THROWS(validate(FunctionClass{FiniteTable{{Eigen::MatrixXd::Zero(3, 2)}}}, 2, 2));
  Eigen::MatrixXd asym = oracle::line_metric(vec({0, 1, 2, 3}));
  asym(0, 1) = 2.0;
  CHECK_THROWS(validate_metric(asym));
  Eigen::MatrixXd tri = oracle::line_metric(vec({0, 1, 2}));
  tri(0, 2) = tri(2, 0) = 5.0;
  CHECK_THROWS(validate_metric(tri));
  CHECK_NOTHROW(validate_metric(discrete_metric(4)));
}

TEST_CASE("zero difference has zero seminorm in every class") {
  SplitMix64 rng(21);
  const Eigen::MatrixXd p = row_table(oracle::grid_distribution(rng, 6, 100), 2, 3);
  for (const auto& fc : all_classes(rng, 2, 3)) CHECK(std::abs(seminorm(p, p, fc)) < 1e-12);
}

TEST_CASE("total variation uses the factor-2 convention") {
  Eigen::MatrixXd p(1, 2), q(1, 2);
  p << 1.0, 0.0;
  q << 0.0, 1.0;
  CHECK(seminorm(p, q, TotalVariation{}) == doctest::Approx(2.0));
}

TEST_CASE("finite table takes the best function") {
  Eigen::MatrixXd p(2, 2), q(2, 2), f1(2, 2), f2(2, 2);
  p << 0.4, 0.1, 0.2, 0.3;
  q << 0.1, 0.4, 0.2, 0.3;
  f1 << 1, 0, 0, 0;
  f2 << 0.5, -1, 0, 0;
  CHECK(seminorm(p, q, FiniteTable{{f1, f2}}) == doctest::Approx(0.45));
}

TEST_CASE("cost level sets equal the KS distance of the cost pushforward") {
  SplitMix64 rng(22);
  for (int i = 0; i < 50; ++i) {
    Eigen::MatrixXd cost(2, 2);
    for (Index c = 0; c < 4; ++c) cost(c / 2, c % 2) = 0.25 * c + 0.01 * oracle::uniform_int(rng, 0, 20);
    const Eigen::MatrixXd p = row_table(oracle::grid_distribution(rng, 4, 1000), 2, 2);
    const Eigen::MatrixXd q = row_table(oracle::grid_distribution(rng, 4, 1000), 2, 2);
    const double v = seminorm(p, q, CostLevelSets{cost});
    CHECK(std::abs(v - oracle::ks_threshold_scan(p, q, cost)) < 1e-12);
    const CostPushforward pp = pushforward(p, cost), pq = pushforward(q, cost);
    REQUIRE(pp.grid.size() == pq.grid.size());
    CHECK(std::abs(v - ks_distance(pp.grid, Distribution(pp.probs), Distribution(pq.probs))) < 1e-12);
  }
}

TEST_CASE("pushforward merges tied costs") {
  Eigen::MatrixXd cost(2, 2), p(2, 2);
  cost << 1.0, 2.0, 1.0, 3.0;
  p << 0.1, 0.2, 0.3, 0.4;
  const CostPushforward pf = pushforward(p, cost);
  REQUIRE(pf.grid.size() == 3);
  CHECK(pf.probs[0] == doctest::Approx(0.4));
}

TEST_CASE("ks distance examples") {
  const Eigen::VectorXd grid = vec({0.0, 1.0});
  CHECK(ks_distance(grid, Distribution(vec({0.3, 0.7})), Distribution(vec({0.3, 0.7}))) == 0.0);
  CHECK(ks_distance(grid, Distribution(vec({1.0, 0.0})), Distribution(vec({0.0, 1.0}))) == doctest::Approx(1.0));
  CHECK_THROWS(ks_distance(vec({1.0, 0.0}), Distribution(vec({1.0, 0.0})), Distribution(vec({0.0, 1.0}))));
  SplitMix64 rng(23);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd g = vec({-1.0, 0.0, 0.5, 2.0, 3.0});
    const Eigen::VectorXd p = oracle::grid_distribution(rng, 5, 1000), q = oracle::grid_distribution(rng, 5, 1000);
    double scan = 0.0, fp = 0.0, fq = 0.0;
    for (Index k = 0; k < 5; ++k) scan = std::max(scan, std::abs((fp += p[k]) - (fq += q[k])));
    CHECK(std::abs(ks_distance(g, Distribution(p), Distribution(q)) - scan) < 1e-12);
  }
}

TEST_CASE("wasserstein1 examples and axioms") {
  const Eigen::MatrixXd d = oracle::line_metric(vec({0.0, 1.0, 2.0, 3.0}));
  const Distribution p(vec({0.1, 0.2, 0.3, 0.4})), q(vec({0.4, 0.3, 0.2, 0.1}));
  CHECK(wasserstein1(p, q, d) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(wasserstein1(p, p, d)) < 1e-12);
  const Eigen::MatrixXd two = 2.5 * discrete_metric(2);
  CHECK(wasserstein1(Distribution::point_mass(2, 0), Distribution::point_mass(2, 1), two) == doctest::Approx(2.5));
  SplitMix64 rng(24);
  for (int i = 0; i < 30; ++i) {
    Eigen::VectorXd pts(5);
    for (Index k = 0; k < 5; ++k) pts[k] = 0.1 * oracle::uniform_int(rng, 0, 50) + 1e-3 * k;
    const Eigen::MatrixXd m = oracle::line_metric(pts);
    const Distribution a(oracle::grid_distribution(rng, 5, 1000)), b(oracle::grid_distribution(rng, 5, 1000)),
        c(oracle::grid_distribution(rng, 5, 1000));
    const double ab = wasserstein1(a, b, m);
    CHECK(std::abs(ab - oracle::w1_cdf_area(pts, a.probs(), b.probs())) < 1e-9);
    CHECK(std::abs(ab - wasserstein1(b, a, m)) < 1e-9);
    CHECK(ab <= wasserstein1(a, c, m) + wasserstein1(c, b, m) + 1e-9);
    // Discrete metric: W1 is half the l1 distance.
    CHECK(std::abs(wasserstein1(a, b, discrete_metric(5)) - 0.5 * (a.probs() - b.probs()).lpNorm<1>()) < 1e-9);
  }
}

TEST_CASE("bounded Lipschitz examples") {
  const Distribution p(vec({0.1, 0.2, 0.3, 0.4})), q(vec({0.4, 0.3, 0.2, 0.1}));
  const Eigen::MatrixXd d = oracle::line_metric(vec({0.0, 1.0, 2.0, 3.0}));
  CHECK(bounded_lipschitz(p, q, d) == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(std::abs(bounded_lipschitz(p, p, d)) < 1e-12);
  // Two point masses at distance D: the optimum is f = +-D/(D+2), value 2D/(D+2).
  for (double dist : {0.5, 1.0, 2.0, 4.0, 10.0}) {
    const double v = bounded_lipschitz(Distribution::point_mass(2, 0), Distribution::point_mass(2, 1), dist * discrete_metric(2));
    CHECK(v == doctest::Approx(2.0 * dist / (dist + 2.0)).epsilon(1e-9));
  }
}

TEST_CASE("property: seminorm axioms and domination on seeded pairs") {
  SplitMix64 rng(25);
  for (int i = 0; i < 100; ++i) {
    const Index nx = oracle::uniform_int(rng, 1, 3), nu = oracle::uniform_int(rng, 2, 3);
    const auto classes = all_classes(rng, nx, nu);
    const Eigen::MatrixXd p = row_table(oracle::grid_distribution(rng, nx * nu, 1000), nx, nu);
    const Eigen::MatrixXd q = row_table(oracle::grid_distribution(rng, nx * nu, 1000), nx, nu);
    const Eigen::MatrixXd r = row_table(oracle::grid_distribution(rng, nx * nu, 1000), nx, nu);
    const double tv = seminorm(p, q, TotalVariation{});
    for (const auto& fc : classes) {
      const double pq = seminorm(p, q, fc);
      CHECK(pq >= 0.0);
      CHECK(std::abs(pq - seminorm(q, p, fc)) < 1e-9);
      CHECK(pq <= seminorm(p, r, fc) + seminorm(r, q, fc) + 1e-9);
      CHECK(pq <= tv + 1e-9);
    }
    const auto& metric = std::get<BoundedLipschitz>(classes[3]).metric;
    const Distribution pd(flatten(p)), qd(flatten(q));
    const double bl = bounded_lipschitz(pd, qd, metric);
    CHECK(bl <= wasserstein1(pd, qd, metric) + 1e-9);
    CHECK(bl <= (pd.probs() - qd.probs()).lpNorm<1>() + 1e-9);
    CHECK(std::abs(bl - seminorm(p, q, classes[3])) < 1e-9);
  }
}
