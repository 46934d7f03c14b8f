#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "decay/gain_ops.hpp"

using namespace decay;

namespace {

MonotoneOperator ring(int n, double a, Aggregation mu = Aggregation::sum()) {
  GainMatrix g(n);
  for (int i = 0; i < n; ++i) g.set(i, (i + 1) % n, GainSpec::linear(a));
  return MonotoneOperator(std::move(g), mu);
}

// Mutual reachability via Floyd-Warshall closure.
std::set<std::set<int>> closure_components(int n, const std::vector<std::vector<int>>& adj) {
  std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i) {
    r[i][i] = true;
    for (int j : adj[i]) r[i][j] = true;
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (r[i][k] && r[k][j]) r[i][j] = true;
  std::set<std::set<int>> out;
  for (int i = 0; i < n; ++i) {
    std::set<int> c;
    for (int j = 0; j < n; ++j)
      if (r[i][j] && r[j][i]) c.insert(j);
    out.insert(c);
  }
  return out;
}

}  // namespace

TEST(GainSpec, FamilyValues) {
  EXPECT_DOUBLE_EQ(GainSpec::zero()(5.0), 0.0);
  EXPECT_DOUBLE_EQ(GainSpec::linear(2.0)(3.0), 6.0);
  EXPECT_DOUBLE_EQ(GainSpec::power(0.5, 2.0)(2.0), 2.0);
  EXPECT_DOUBLE_EQ(GainSpec::power(0.001, 0.9)(0.0), 0.0);
  for (double s : {0.0, 1e-6, 0.3, 2.0, 17.0}) {
    const double ref = 0.5 * std::pow(std::log(1.0 + 0.8 * (std::exp(std::sqrt(2.0 * s)) - 1.0)), 2);
    EXPECT_NEAR(GainSpec::log_exp(0.8)(s), ref, 1e-12 * (1.0 + ref)) << s;
  }
}

TEST(GainSpec, LogExpWithUnitCoefficientIsIdentity) {
  for (double s : {0.0, 0.5, 3.0, 100.0, 1e5}) EXPECT_NEAR(GainSpec::log_exp(1.0)(s), s, 1e-9 * (1.0 + s));
}

TEST(GainSpec, LogExpLargeArgumentStaysFinite) {
  const double s = 1e6;
  const double x = std::sqrt(2.0 * s);
  const double ref = 0.5 * std::pow(x + std::log(0.8), 2);  // e^-x negligible
  const double v = GainSpec::log_exp(0.8)(s);
  ASSERT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, ref, 1e-9 * ref);
  EXPECT_LT(v, s);
}

TEST(GainSpec, RejectsInvalidParameters) {
  EXPECT_THROW((void)GainSpec::linear(0.0), Error);
  EXPECT_THROW((void)GainSpec::linear(-1.0), Error);
  EXPECT_THROW((void)GainSpec::power(1.0, 0.0), Error);
  EXPECT_THROW((void)GainSpec::log_exp(std::nan("")), Error);
  try {
    (void)GainSpec::linear(-1.0);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidParameter);
  }
}

TEST(GainSpec, CustomPropertyChecks) {
  EXPECT_NO_THROW((void)GainSpec::custom([](double s) { return std::sqrt(s); }));
  EXPECT_THROW((void)GainSpec::custom([](double s) { return s + 1.0; }), Error);
  EXPECT_THROW((void)GainSpec::custom([](double s) { return s < 1.0 ? s : 1.0; }), Error);
  EXPECT_THROW((void)GainSpec::custom([](double s) { return -s; }), Error);
  EXPECT_THROW((void)GainSpec::custom(nullptr), Error);
}

TEST(Aggregation, CustomPropertyChecks) {
  auto l2 = [](std::span<const double> s) {
    double a = 0.0;
    for (double x : s) a += x * x;
    return std::sqrt(a);
  };
  EXPECT_NO_THROW((void)Aggregation::custom(l2, 3));
  // Ignores the second argument: not strictly increasing.
  EXPECT_THROW((void)Aggregation::custom([](std::span<const double> s) { return s[0]; }, 2), Error);
  EXPECT_THROW((void)Aggregation::custom([](std::span<const double> s) { return s[0] + s[1] + 1.0; }, 2), Error);
}

TEST(MonotoneOperator, SumAndMaxEvaluation) {
  GainMatrix g(2);
  g.set(0, 1, GainSpec::linear(2.0));
  g.set(0, 0, GainSpec::linear(0.5));
  g.set(1, 0, GainSpec::power(1.0, 2.0));
  const Vector s = (Vector(2) << 1.0, 3.0).finished();
  const MonotoneOperator sum(g, Aggregation::sum());
  const MonotoneOperator mx(g, Aggregation::max());
  EXPECT_DOUBLE_EQ(sum(s)[0], 6.5);
  EXPECT_DOUBLE_EQ(sum(s)[1], 1.0);
  EXPECT_DOUBLE_EQ(mx(s)[0], 6.0);
  EXPECT_DOUBLE_EQ(eval_operator(mx, s)[1], 1.0);
  EXPECT_EQ(sum(Vector::Zero(2)), Vector::Zero(2));
}

TEST(MonotoneOperator, InputChecks) {
  const auto op = ring(3, 0.5);
  EXPECT_THROW((void)op(Vector::Zero(2)), Error);
  try {
    (void)op((Vector(3) << 1.0, -1.0, 0.0).finished());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NegativeInput);
  }
  EXPECT_THROW(MonotoneOperator(GainMatrix(3), std::vector<Aggregation>(2)), Error);
}

TEST(MonotoneOperator, Monotone) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  GainMatrix g(3);
  g.set(0, 1, GainSpec::log_exp(0.7));
  g.set(1, 2, GainSpec::power(0.3, 1.5));
  g.set(2, 0, GainSpec::linear(0.4));
  g.set(2, 2, GainSpec::power(0.1, 0.5));
  const MonotoneOperator op(g, std::vector<Aggregation>{Aggregation::sum(), Aggregation::max(), Aggregation::sum()});
  for (int k = 0; k < 200; ++k) {
    Vector s(3), d(3);
    for (int i = 0; i < 3; ++i) {
      s[i] = u(rng);
      d[i] = u(rng);
    }
    EXPECT_TRUE(leq(op(s), op(s + d)));
  }
}

TEST(OrderHelpers, StrictAndMargin) {
  const Vector a = (Vector(2) << 1.0, 2.0).finished();
  const Vector b = (Vector(2) << 1.5, 2.1).finished();
  EXPECT_TRUE(strictly_below(a, b));
  EXPECT_FALSE(strictly_below(a, a));
  EXPECT_TRUE(leq(a, a));
  EXPECT_FALSE(strictly_below(a, b, 0.2));
  EXPECT_TRUE(strictly_below(a, b, 0.05));
}

TEST(Irreducibility, RingAndDiagonal) {
  EXPECT_TRUE(is_irreducible(ring(5, 0.5).gamma()));
  GainMatrix d(2);
  d.set(0, 0, GainSpec::linear(2.0));
  d.set(1, 1, GainSpec::linear(2.0));
  EXPECT_FALSE(is_irreducible(d));
  GainMatrix one(1);
  EXPECT_TRUE(is_irreducible(one));
  EXPECT_EQ(format_blocks(strongly_connected_components(d.adjacency_lists())), "{0} {1}");
}

TEST(Irreducibility, MatchesReachabilityOracle) {
  std::mt19937_64 rng(2024);
  std::bernoulli_distribution edge(0.3);
  int irreducible = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    GainMatrix g(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (edge(rng)) g.set(i, j, GainSpec::linear(1.0));
    const auto adj = g.adjacency_lists();
    const auto got = strongly_connected_components(adj);
    std::set<std::set<int>> as_sets;
    std::size_t total = 0;
    for (const auto& c : got) {
      as_sets.insert(std::set<int>(c.begin(), c.end()));
      total += c.size();
    }
    const auto want = closure_components(n, adj);
    ASSERT_EQ(total, static_cast<std::size_t>(n));
    ASSERT_EQ(as_sets, want);
    ASSERT_EQ(is_irreducible(g), want.size() == 1);
    irreducible += want.size() == 1;
  }
  EXPECT_GT(irreducible, 100);
}

TEST(SmallGain, SampledCheck) {
  GainMatrix d(2);
  d.set(0, 0, GainSpec::linear(2.0));
  d.set(1, 1, GainSpec::linear(2.0));
  const MonotoneOperator bad(d, Aggregation::max());
  const auto pts = orthant_samples(2, 10.0, 200, 3);
  const auto w = check_small_gain_sampled(bad, pts);
  ASSERT_TRUE(w.has_value());
  EXPECT_TRUE(leq(*w, bad(*w)));
  EXPECT_FALSE(check_small_gain_sampled(ring(4, 0.5), orthant_samples(4, 10.0, 500, 3)).has_value());
}

TEST(SmallGain, SamplesAreInsideTheBall) {
  for (const Vector& s : orthant_samples(3, 5.0, 300, 11)) {
    EXPECT_TRUE((s.array() >= 0.0).all());
    EXPECT_LE(s.norm(), 5.0 + 1e-12);
  }
}

TEST(MonotoneOperator, WorkedExamples) {
  GainMatrix g(2);
  g.set(0, 1, GainSpec::linear(0.5));
  g.set(1, 0, GainSpec::linear(0.5));
  const MonotoneOperator op(g, Aggregation::sum());
  EXPECT_EQ(op(Vector::Ones(2)), Vector::Constant(2, 0.5));
  EXPECT_EQ(op(Vector::Zero(2)), Vector::Zero(2));
  EXPECT_TRUE(is_irreducible(g));

  // Block upper-triangular pattern.
  GainMatrix b(3);
  b.set(0, 0, GainSpec::linear(0.1));
  b.set(0, 1, GainSpec::linear(0.1));
  b.set(1, 0, GainSpec::linear(0.1));
  b.set(0, 2, GainSpec::linear(0.1));
  b.set(1, 2, GainSpec::linear(0.1));
  b.set(2, 2, GainSpec::linear(0.1));
  EXPECT_FALSE(is_irreducible(b));
  EXPECT_EQ(strongly_connected_components(b.adjacency_lists()).size(), 2u);
}

TEST(SmallGain, WorkedExamples) {
  // Spectral radius 0.5: no witness on random samples.
  GainMatrix g(2);
  g.set(0, 1, GainSpec::linear(0.5));
  g.set(1, 0, GainSpec::linear(0.5));
  EXPECT_FALSE(check_small_gain_sampled(MonotoneOperator(g, Aggregation::sum()), orthant_samples(2, 10.0, 100, 1)));
  // Identity-like diagonal: e is a witness.
  GainMatrix d(2);
  d.set(0, 0, GainSpec::linear(1.0));
  d.set(1, 1, GainSpec::linear(1.0));
  const std::vector<Vector> e{Vector::Ones(2)};
  const auto w = check_small_gain_sampled(MonotoneOperator(d, Aggregation::sum()), e);
  ASSERT_TRUE(w.has_value());
  EXPECT_EQ(*w, Vector::Ones(2));
  EXPECT_FALSE(check_small_gain_sampled(MonotoneOperator(d, Aggregation::sum()), std::vector<Vector>{}));
}
