#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include "decay/triangulation.hpp"

using namespace decay;

namespace {

Simplex random_strip_simplex(std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<long> coord(-5, 5);
  Simplex s;
  s.delta = 0.25;
  s.base.resize(static_cast<std::size_t>(n + 1));
  for (int k = 0; k < n; ++k) s.base[static_cast<std::size_t>(k)] = coord(rng);
  s.base[static_cast<std::size_t>(n)] = 0;
  s.perm.resize(static_cast<std::size_t>(n + 1));
  std::iota(s.perm.begin(), s.perm.end(), 0);
  std::shuffle(s.perm.begin(), s.perm.end(), rng);
  return s;
}

std::set<LatticePoint> vertex_set(const Simplex& s, int skip) {
  std::set<LatticePoint> out;
  for (int i = 0; i < s.vertex_count(); ++i)
    if (i != skip) out.insert(s.lattice_vertex(i));
  return out;
}

// Barycentric coordinates of x in the full (N+1)-simplex s.
Eigen::VectorXd barycentric(const Simplex& s, const Eigen::VectorXd& x) {
  const int m = s.vertex_count();
  Eigen::MatrixXd A(m, m);
  Eigen::VectorXd rhs(m);
  rhs[0] = 1.0;
  rhs.tail(m - 1) = x;
  for (int j = 0; j < m; ++j) {
    A(0, j) = 1.0;
    A.block(1, j, m - 1, 1) = s.vertex(j);
  }
  return A.fullPivLu().solve(rhs);
}

}  // namespace

TEST(Triangulation, VerticesFollowPermutation) {
  Simplex s{{2, -1, 0}, {1, 2, 0}, 0.5};
  const auto v = vertices(s);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(s.lattice_vertex(0), (LatticePoint{2, -1, 0}));
  EXPECT_EQ(s.lattice_vertex(1), (LatticePoint{2, 0, 0}));
  EXPECT_EQ(s.lattice_vertex(2), (LatticePoint{2, 0, 1}));
  EXPECT_EQ(s.lattice_vertex(3), (LatticePoint{3, 0, 1}));
  EXPECT_DOUBLE_EQ(v[3][0], 1.5);
  EXPECT_DOUBLE_EQ(v[3][2], 1.0);  // strip axis is not scaled
  for (int i = 0; i < 4; ++i) EXPECT_EQ(s.index_of(s.lattice_vertex(i)), i);
  EXPECT_EQ(s.index_of(LatticePoint{3, -1, 0}), -1);
  EXPECT_EQ(s.index_of(LatticePoint{9, 9, 9}), -1);
}

TEST(Triangulation, PivotInvolutionAndFacetSharing) {
  std::mt19937_64 rng(99);
  int checked = 0, exits = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const Simplex s = random_strip_simplex(rng, n);
    const int j = static_cast<int>(rng() % static_cast<unsigned>(s.vertex_count()));
    Simplex t;
    try {
      t = pivot(s, j);
    } catch (const Error& e) {
      ASSERT_EQ(e.kind(), ErrorKind::BoundaryExit);
      // Only the facets at t = 0 or t = 1 are on the boundary.
      const auto facet = vertex_set(s, j);
      const long t0 = facet.begin()->back();
      for (const auto& y : facet) ASSERT_EQ(y.back(), t0);
      ++exits;
      continue;
    }
    const int e = entering_index(j, s.vertex_count());
    ASSERT_EQ(pivot(t, e), s);
    ASSERT_EQ(vertex_set(s, j), vertex_set(t, e));
    ASSERT_TRUE(facet(s, j) == facet(t, e));
    ASSERT_EQ(s.index_of(t.lattice_vertex(e)), -1);
    ASSERT_TRUE(in_strip(t));
    ++checked;
  }
  EXPECT_GT(checked, 8000);
  EXPECT_GT(exits, 100);
}

TEST(Triangulation, PivotRejectsBadIndex) {
  const Simplex s{{0, 0, 0}, {0, 1, 2}, 1.0};
  EXPECT_THROW((void)pivot(s, -1), Error);
  EXPECT_THROW((void)pivot(s, 4), Error);
}

TEST(Triangulation, SimplicesTileTheStrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 1; n <= 3; ++n) {
    const double delta = 0.5;
    for (int trial = 0; trial < 200; ++trial) {
      Eigen::VectorXd x(n + 1);
      for (int k = 0; k < n; ++k) x[k] = 4.0 * u(rng) - 2.0;
      x[n] = 0.02 + 0.96 * u(rng);
      // Enumerate every strip simplex with a vertex in the unit cell of x.
      LatticePoint fl(static_cast<std::size_t>(n + 1));
      for (int k = 0; k < n; ++k) fl[static_cast<std::size_t>(k)] = static_cast<long>(std::floor(x[k] / delta));
      fl[static_cast<std::size_t>(n)] = 0;
      int containing = 0;
      for (int mask = 0; mask < (1 << n); ++mask) {
        Simplex s;
        s.delta = delta;
        s.base = fl;
        for (int k = 0; k < n; ++k)
          if (mask & (1 << k)) --s.base[static_cast<std::size_t>(k)];
        s.perm.resize(static_cast<std::size_t>(n + 1));
        std::iota(s.perm.begin(), s.perm.end(), 0);
        do {
          if ((barycentric(s, x).array() >= -1e-12).all()) ++containing;
        } while (std::next_permutation(s.perm.begin(), s.perm.end()));
      }
      ASSERT_EQ(containing, 1) << "n=" << n << " trial=" << trial;
    }
  }
}

TEST(Triangulation, LocateGivesPositiveBarycentricCoordinates) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    Eigen::VectorXd c(n);
    for (int k = 0; k < n; ++k) c[k] = u(rng);
    const double delta = 0.1 + u(rng) / 5.0;
    const Simplex s = locate_simplex(c, delta);
    ASSERT_TRUE(in_strip(s));
    ASSERT_EQ(s.perm.back(), n);
    const Eigen::VectorXd lam = layer0_barycentric(s, c);
    ASSERT_TRUE((lam.array() > 0.0).all());
    ASSERT_NEAR(lam.sum(), 1.0, 1e-12);
    Eigen::VectorXd back = Eigen::VectorXd::Zero(n);
    for (int j = 0; j <= n; ++j) back += lam[j] * s.vertex(j).head(n);
    ASSERT_LT((back - c).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Triangulation, LocateErrors) {
  const auto expect_kind = [](const Eigen::VectorXd& c, double d, ErrorKind k) {
    try {
      (void)locate_simplex(c, d);
      FAIL() << "no error";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), k);
    }
  };
  expect_kind(Eigen::Vector2d(1.0, 0.3), 0.5, ErrorKind::DegenerateLocation);
  expect_kind(Eigen::Vector2d(0.3, 0.3), 0.5, ErrorKind::DegenerateLocation);
  expect_kind(Eigen::Vector2d(0.3, -0.3), 0.5, ErrorKind::InvalidParameter);
  expect_kind(Eigen::Vector2d(0.3, 0.2), 0.0, ErrorKind::InvalidParameter);
}

TEST(Triangulation, LayerZeroFacetIsAStripBoundary) {
  const Simplex s = locate_simplex(Eigen::Vector3d(0.31, 0.72, 0.55), 0.25);
  try {
    (void)pivot(s, s.vertex_count() - 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BoundaryExit);
  }
}

TEST(Triangulation, MeshSize) {
  EXPECT_DOUBLE_EQ(mesh_p(0.5, 4), 1.0);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const Simplex s = random_strip_simplex(rng, n);
    double diam = 0.0;
    const auto v = vertices(s);
    for (const auto& a : v)
      for (const auto& b : v) diam = std::max(diam, (a - b).head(n).norm());
    EXPECT_NEAR(diam, mesh_p(s.delta, n), 1e-12);
  }
}

TEST(Triangulation, WorkedExamples) {
  // Unit cell, identity order.
  const Simplex a{{0, 0}, {0, 1}, 1.0};
  const auto va = vertices(a);
  EXPECT_EQ(va[1], Eigen::Vector2d(1.0, 0.0));
  EXPECT_EQ(va[2], Eigen::Vector2d(1.0, 1.0));
  // Scaled base.
  const Simplex b{{2, 0}, {1, 0}, 0.5};
  const auto vb = vertices(b);
  EXPECT_EQ(vb[0], Eigen::Vector2d(1.0, 0.0));
  EXPECT_EQ(vb[1], Eigen::Vector2d(1.0, 1.0));
  EXPECT_EQ(vb[2], Eigen::Vector2d(1.5, 1.0));
  for (std::size_t i = 0; i + 1 < vb.size(); ++i) EXPECT_TRUE((vb[i].array() <= vb[i + 1].array()).all());

  // Pivot across the facet opposite the first vertex.
  const Simplex c = pivot(a, 0);
  EXPECT_EQ(c.base, (LatticePoint{1, 0}));
  EXPECT_EQ(c.perm, (std::vector<int>{1, 0}));
  EXPECT_EQ(facet(a, 0).lattice_vertices(), (std::vector<LatticePoint>{{1, 0}, {1, 1}}));
  EXPECT_TRUE(facet(a, 0) == facet(c, entering_index(0, 3)));
  EXPECT_FALSE(facet(a, 0) == facet(a, 1));
  EXPECT_THROW((void)facet(a, 3), Error);

  // Strip axis first: the neighbour would put a vertex at t = 2.
  const Simplex d{{0, 0}, {1, 0}, 1.0};
  EXPECT_THROW((void)pivot(d, 0), Error);

  // locate: fractional parts 0.7 > 0.3 order x1, x2, then t.
  for (const auto& [c1, c2, delta] : {std::tuple{0.7, 0.3, 1.0}, std::tuple{1.4, 0.6, 2.0}}) {
    const Simplex s = locate_simplex(Eigen::Vector2d(c1, c2), delta);
    EXPECT_EQ(s.base, (LatticePoint{0, 0, 0}));
    EXPECT_EQ(s.perm, (std::vector<int>{0, 1, 2}));
  }
  EXPECT_DOUBLE_EQ(mesh_p(1.0, 4), 2.0);
  EXPECT_DOUBLE_EQ(mesh_p(0.5, 1), 0.5);
  EXPECT_NEAR(mesh_p(24.0 / 3.0, 3), 13.856, 1e-3);
}
