#include <cmath>

#include "doctest.h"
#include "seqcoord/oracles.hpp"
#include "seqcoord/prob_core.hpp"

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

}  // namespace

TEST_CASE("alphabet and distribution invariants") {
  CHECK_THROWS(Alphabet({"a", "a"}));
  CHECK_THROWS(Alphabet(std::vector<std::string>{}));
  CHECK(Alphabet({"lo", "hi"}).index_of("hi") == 1);
  CHECK_THROWS(Distribution(vec({0.5, 0.6})));
  CHECK_THROWS(Distribution(vec({1.2, -0.2})));
  CHECK_NOTHROW(Distribution(vec({0.25, 0.75})));
  CHECK_THROWS(MarkovKernel(mat2(0.5, 0.5, 0.9, 0.2)));
}

TEST_CASE("mixed-radix digits round trip") {
  const std::vector<int> radices{2, 3, 2, 4};
  std::vector<int> digits(4);
  for (Index c = 0; c < 48; ++c) {
    decode_digits(c, radices, digits);
    CHECK(encode_digits(digits, radices) == c);
  }
  decode_digits(1 * 24 + 2 * 8 + 0 * 4 + 3, radices, digits);
  CHECK(digits == std::vector<int>{1, 2, 0, 3});
}

TEST_CASE("assemble: deterministic copy gives a diagonal joint") {
  const auto src = SourceLaw::iid(Distribution(vec({0.5, 0.5})), 1);
  const auto pol = DirectedKernel::memoryless(MarkovKernel::identity(2), 1);
  const Eigen::MatrixXd j = assemble_strategic_measure(src, pol).as_matrix();
  CHECK(j(0, 0) == doctest::Approx(0.5));
  CHECK(j(1, 1) == doctest::Approx(0.5));
  CHECK(j(0, 1) == 0.0);
  CHECK(j(1, 0) == 0.0);
}

TEST_CASE("assemble: product source and memoryless policy factorize") {
  const auto src1 = SourceLaw::iid(Distribution(vec({0.3, 0.7})), 1);
  const auto pol1 = DirectedKernel::memoryless(MarkovKernel(mat2(0.9, 0.1, 0.2, 0.8)), 1);
  const auto src2 = SourceLaw::iid(Distribution(vec({0.3, 0.7})), 2);
  const auto pol2 = DirectedKernel::memoryless(MarkovKernel(mat2(0.9, 0.1, 0.2, 0.8)), 2);
  const Eigen::MatrixXd j1 = assemble_strategic_measure(src1, pol1).as_matrix();
  const Eigen::MatrixXd j2 = assemble_strategic_measure(src2, pol2).as_matrix();
  for (Index x0 = 0; x0 < 2; ++x0)
    for (Index x1 = 0; x1 < 2; ++x1)
      for (Index u0 = 0; u0 < 2; ++u0)
        for (Index u1 = 0; u1 < 2; ++u1) CHECK(j2(x0 * 2 + x1, u0 * 2 + u1) == doctest::Approx(j1(x0, u0) * j1(x1, u1)).epsilon(1e-14));
}

TEST_CASE("assemble matches the product-formula oracle on seeded instances") {
  SplitMix64 rng(11);
  for (int i = 0; i < 20; ++i) {
    const int T = oracle::uniform_int(rng, 1, 3);
    const Index nx = oracle::uniform_int(rng, 2, 3), nu = oracle::uniform_int(rng, 2, 3);
    const auto src = oracle::random_source(rng, nx, T, 0);
    const auto pol = oracle::random_policy(rng, nx, nu, T, 0);
    const StrategicMeasure m = assemble_strategic_measure(src, pol);
    const Eigen::MatrixXd ref = oracle::product_formula_joint(src, pol);
    CHECK((m.as_matrix() - ref).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(std::abs(m.joint().sum() - 1.0) < 1e-12);
    CHECK(causality_violation(nx, nu, T, m.as_matrix()) < 1e-10);
  }
}

TEST_CASE("marginals") {
  SplitMix64 rng(12);
  const auto src = oracle::random_source(rng, 2, 2);
  const auto pol = oracle::random_policy(rng, 2, 2, 2);
  const StrategicMeasure m = assemble_strategic_measure(src, pol);
  const Eigen::MatrixXd j = oracle::product_formula_joint(src, pol);
  for (int t = 0; t < 2; ++t) {
    // Hand summation over the 16 trajectories.
    Eigen::MatrixXd pair = Eigen::MatrixXd::Zero(2, 2);
    for (Index x = 0; x < 4; ++x)
      for (Index u = 0; u < 4; ++u) pair(t == 0 ? x / 2 : x % 2, t == 0 ? u / 2 : u % 2) += j(x, u);
    CHECK((pair_marginal(m, t) - pair).cwiseAbs().maxCoeff() < 1e-15);
    const Distribution mu_t = marginal_state(m, t);
    CHECK(mu_t.probs().sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((mu_t.probs() - pair.rowwise().sum()).cwiseAbs().maxCoeff() < 1e-15);
    const MarkovKernel pi_t = marginal_policy(m, t);
    for (Index x = 0; x < 2; ++x) CHECK((pi_t.matrix().row(x) - pair.row(x) / pair.row(x).sum()).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("marginal policy of memoryless and deterministic policies") {
  const auto src = SourceLaw::iid(Distribution(vec({0.3, 0.7})), 2);
  const Eigen::MatrixXd k = mat2(0.9, 0.1, 0.2, 0.8);
  const StrategicMeasure m = assemble_strategic_measure(src, DirectedKernel::memoryless(MarkovKernel(k), 2));
  CHECK((marginal_policy(m, 1).matrix() - k).cwiseAbs().maxCoeff() < 1e-14);
  const StrategicMeasure id = assemble_strategic_measure(src, DirectedKernel::memoryless(MarkovKernel::identity(2), 2));
  CHECK((marginal_policy(id, 0).matrix() - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  // Zero-probability state rows are uniform.
  const auto point = SourceLaw::iid(Distribution::point_mass(2, 0), 1);
  const StrategicMeasure pm = assemble_strategic_measure(point, DirectedKernel::memoryless(MarkovKernel(k), 1));
  CHECK(marginal_policy(pm, 0).matrix()(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("mutual information examples") {
  CHECK(mutual_information(Distribution::uniform(2), MarkovKernel::identity(2)) == doctest::Approx(std::log(2.0)));
  CHECK(std::abs(mutual_information(Distribution(vec({0.3, 0.7})), MarkovKernel::constant(Distribution(vec({0.4, 0.6})), 2))) <
        1e-15);
  const Eigen::VectorXd mu = vec({0.3, 0.7});
  const Eigen::MatrixXd k = mat2(0.9, 0.1, 0.2, 0.8);
  CHECK(mutual_information(Distribution(mu), MarkovKernel(k)) ==
        doctest::Approx(oracle::mutual_information_double_sum(mu, k)).epsilon(1e-14));
}

TEST_CASE("directed information: chain rule and per-step values") {
  SplitMix64 rng(13);
  for (int i = 0; i < 30; ++i) {
    const int T = oracle::uniform_int(rng, 1, 3);
    const Index nx = oracle::uniform_int(rng, 2, 3), nu = oracle::uniform_int(rng, 2, 3);
    const auto src = oracle::random_source(rng, nx, T, 0);
    const auto pol = oracle::random_policy(rng, nx, nu, T, 0);
    const DirectedInformation di = directed_information(src, pol);
    const Eigen::MatrixXd j = oracle::product_formula_joint(src, pol);
    CHECK(di.total == doctest::Approx(oracle::joint_table_information(j)).epsilon(1e-10));
    CHECK(di.total == doctest::Approx(oracle::directed_information_from_joint(j, nx, nu, T)).epsilon(1e-10));
    double sum = 0.0;
    for (double r : di.per_step) {
      CHECK(r >= -1e-12);
      sum += r;
    }
    CHECK(sum == doctest::Approx(di.total).epsilon(1e-12));
  }
}

TEST_CASE("directed information of memoryless and state-independent policies") {
  const Eigen::VectorXd mu = vec({0.3, 0.7});
  const Eigen::MatrixXd k = mat2(0.9, 0.1, 0.2, 0.8);
  const DirectedInformation di =
      directed_information(SourceLaw::iid(Distribution(mu), 3), DirectedKernel::memoryless(MarkovKernel(k), 3));
  CHECK(di.total == doctest::Approx(3.0 * oracle::mutual_information_double_sum(mu, k)).epsilon(1e-12));
  SplitMix64 rng(14);
  const auto src = oracle::random_source(rng, 3, 2);
  const auto blind = DirectedKernel::memoryless(MarkovKernel::constant(Distribution(vec({0.2, 0.8})), 3), 2);
  CHECK(std::abs(directed_information(src, blind).total) < 1e-12);
}

TEST_CASE("information densities") {
  SplitMix64 rng(15);
  const auto src = oracle::random_source(rng, 2, 2);
  const auto pol = oracle::random_policy(rng, 2, 2, 2);
  const DirectedInformation di = directed_information(src, pol);
  for (int t = 0; t < 2; ++t) {
    CHECK(info_density(src, pol, t, 1).expectation() == doctest::Approx(di.per_step[static_cast<std::size_t>(t)]).epsilon(1e-9));
    CHECK(info_density(src, pol, t, 2).expectation() ==
          doctest::Approx(2.0 * di.per_step[static_cast<std::size_t>(t)]).epsilon(1e-9));
  }
  const auto blind = DirectedKernel::memoryless(MarkovKernel::constant(Distribution(vec({0.2, 0.8})), 2), 2);
  CHECK(info_density(src, blind, 1, 2).values.cwiseAbs().maxCoeff() < 1e-12);
  // u = x on a product source: density of a reachable cell is -log P(u).
  const Eigen::VectorXd mu = vec({0.3, 0.7});
  const InfoDensityTable d = info_density(SourceLaw::iid(Distribution(mu), 1),
                                          DirectedKernel::memoryless(MarkovKernel::identity(2), 1), 0, 1);
  for (Index c = 0; c < d.probs.size(); ++c) {
    if (d.probs[c] > 0.0) CHECK(d.values[c] == doctest::Approx(-std::log(mu[c / 2])));
  }
  CHECK_THROWS(info_density(src, pol, 1, 12));
}

TEST_CASE("exact entropy") {
  CHECK(exact_entropy(Distribution::uniform(4)) == doctest::Approx(std::log(4.0)));
  CHECK(exact_entropy(Distribution::point_mass(3, 1)) == 0.0);
  CHECK(exact_entropy(Distribution(vec({0.25, 0.75}))) ==
        doctest::Approx(-0.25 * std::log(0.25) - 0.75 * std::log(0.75)).epsilon(1e-15));
}

TEST_CASE("property: kernels, measures and information stay consistent") {
  SplitMix64 rng(16);
  for (int i = 0; i < 40; ++i) {
    const int T = oracle::uniform_int(rng, 1, 3);
    const Index nx = oracle::uniform_int(rng, 2, 3), nu = oracle::uniform_int(rng, 2, 3);
    const auto src = oracle::random_source(rng, nx, T, 0);
    // Full support: rows behind zero-probability action prefixes are not
    // recoverable from the joint conditional.
    const auto pol = oracle::random_policy(rng, nx, nu, T, 1);
    const MarkovKernel jc = joint_conditional(pol);
    CHECK((jc.matrix().rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    const DirectedKernel back = disintegrate(jc.matrix(), nx, nu, T);
    for (int t = 0; t < T; ++t) CHECK((back.factor(t).matrix() - pol.factor(t).matrix()).cwiseAbs().maxCoeff() < 1e-12);
    const StrategicMeasure m = assemble_strategic_measure(src, pol);
    CHECK(joint_mutual_information(m) >= -1e-12);
    const auto factors = action_factors(m);
    for (const auto& f : factors) CHECK((f.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  }
}
