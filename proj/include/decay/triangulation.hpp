#pragma once

// K1 (Freudenthal) triangulation of R^{N+1} restricted to the strip
// R^N x [0,1] and scaled by P = diag(delta, ..., delta, 1).
//
// A simplex is eta(x, pi): base x in Z^{N+1} and a permutation pi of
// {0, ..., N}; vertex i+1 = vertex i + e_{pi(i)}. Axis N is the homotopy
// (strip) axis. All indices are 0-based: vertices 0..N+1, axes 0..N.

#include <Eigen/Core>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "decay/error.hpp"

namespace decay {

using LatticePoint = std::vector<long>;

struct Simplex {
  LatticePoint base;     // size N+1; base.back() == 0 for strip simplices
  std::vector<int> perm; // permutation of {0, ..., N}
  double delta = 1.0;

  /// N, the dimension of the underlying space (not the simplex).
  [[nodiscard]] int dim() const noexcept { return static_cast<int>(base.size()) - 1; }
  [[nodiscard]] int vertex_count() const noexcept { return static_cast<int>(base.size()) + 1; }

  [[nodiscard]] LatticePoint lattice_vertex(int i) const {
    LatticePoint y = base;
    for (int k = 0; k < i; ++k) ++y[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])];
    return y;
  }

  /// Real coordinates (delta-scaled v, unscaled t) of a lattice point.
  [[nodiscard]] Eigen::VectorXd to_real(const LatticePoint& y) const {
    const int n = dim();
    Eigen::VectorXd r(n + 1);
    for (int k = 0; k < n; ++k) r[k] = delta * static_cast<double>(y[static_cast<std::size_t>(k)]);
    r[n] = static_cast<double>(y[static_cast<std::size_t>(n)]);
    return r;
  }

  [[nodiscard]] Eigen::VectorXd vertex(int i) const { return to_real(lattice_vertex(i)); }

  /// Position of a lattice point among the vertices, or -1. Vertex i is the
  /// unique vertex whose coordinate sum exceeds the base's by i.
  [[nodiscard]] int index_of(const LatticePoint& y) const {
    long offset = 0;
    for (std::size_t k = 0; k < base.size(); ++k) offset += y[k] - base[k];
    if (offset < 0 || offset >= vertex_count()) return -1;
    return lattice_vertex(static_cast<int>(offset)) == y ? static_cast<int>(offset) : -1;
  }

  friend bool operator==(const Simplex& a, const Simplex& b) {
    return a.base == b.base && a.perm == b.perm && a.delta == b.delta;
  }
};

/// The facet of `parent` opposite vertex `opposite`. Two facets are equal
/// when they have the same vertex set, whichever simplex they came from.
struct Facet {
  Simplex parent;
  int opposite = 0;

  [[nodiscard]] std::vector<LatticePoint> lattice_vertices() const {
    std::vector<LatticePoint> out;
    for (int i = 0; i < parent.vertex_count(); ++i)
      if (i != opposite) out.push_back(parent.lattice_vertex(i));
    return out;
  }

  friend bool operator==(const Facet& a, const Facet& b) {
    return a.parent.delta == b.parent.delta && a.lattice_vertices() == b.lattice_vertices();
  }
};

[[nodiscard]] inline Facet facet(const Simplex& s, int j) {
  if (j < 0 || j >= s.vertex_count()) throw Error(ErrorKind::OutOfRange, "facet index out of range");
  return Facet{s, j};
}

/// Real-space vertices, ordered y^0 < y^1 < ... < y^{N+1}.
[[nodiscard]] inline std::vector<Eigen::VectorXd> vertices(const Simplex& s) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(s.vertex_count()));
  LatticePoint y = s.base;
  out.push_back(s.to_real(y));
  for (int k : s.perm) {
    ++y[static_cast<std::size_t>(k)];
    out.push_back(s.to_real(y));
  }
  return out;
}

[[nodiscard]] inline bool in_strip(const Simplex& s) { return s.base.back() == 0; }

/// The strip simplex eta^0 whose layer-0 facet (vertices 0..N) contains
/// (c, 0) in its relative interior; the strip axis comes last in pi.
[[nodiscard]] inline Simplex locate_simplex(const Eigen::VectorXd& c, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorKind::InvalidParameter, "delta must be positive");
  const int n = static_cast<int>(c.size());
  if (n == 0) throw Error(ErrorKind::DimensionMismatch, "empty center");
  Simplex s;
  s.delta = delta;
  s.base.assign(static_cast<std::size_t>(n + 1), 0);
  std::vector<double> frac(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    if (!(c[k] > 0.0)) throw Error(ErrorKind::InvalidParameter, "center must be strictly positive");
    const double scaled = c[k] / delta;
    const double fl = std::floor(scaled);
    s.base[static_cast<std::size_t>(k)] = static_cast<long>(fl);
    frac[static_cast<std::size_t>(k)] = scaled - fl;
    if (frac[static_cast<std::size_t>(k)] == 0.0) {
      throw Error(ErrorKind::DegenerateLocation, "center lies on a lattice hyperplane");
    }
  }
  s.perm.resize(static_cast<std::size_t>(n));
  std::iota(s.perm.begin(), s.perm.end(), 0);
  std::stable_sort(s.perm.begin(), s.perm.end(), [&](int a, int b) {
    return frac[static_cast<std::size_t>(a)] > frac[static_cast<std::size_t>(b)];
  });
  for (int k = 1; k < n; ++k) {
    if (frac[static_cast<std::size_t>(s.perm[static_cast<std::size_t>(k)])] ==
        frac[static_cast<std::size_t>(s.perm[static_cast<std::size_t>(k - 1)])]) {
      throw Error(ErrorKind::DegenerateLocation, "center has tied fractional parts");
    }
  }
  s.perm.push_back(n);
  return s;
}

/// The neighbour sharing the facet opposite vertex j. Throws BoundaryExit if
/// the neighbour would leave the strip R^N x [0,1].
[[nodiscard]] inline Simplex pivot(const Simplex& s, int j) {
  const int last = s.vertex_count() - 1;  // N+1
  if (j < 0 || j > last) throw Error(ErrorKind::OutOfRange, "pivot index out of range");
  Simplex r = s;
  if (j == 0) {
    const int k = s.perm.front();
    ++r.base[static_cast<std::size_t>(k)];
    std::rotate(r.perm.begin(), r.perm.begin() + 1, r.perm.end());
  } else if (j == last) {
    const int k = s.perm.back();
    --r.base[static_cast<std::size_t>(k)];
    std::rotate(r.perm.rbegin(), r.perm.rbegin() + 1, r.perm.rend());
  } else {
    std::swap(r.perm[static_cast<std::size_t>(j - 1)], r.perm[static_cast<std::size_t>(j)]);
  }
  if (!in_strip(r)) throw Error(ErrorKind::BoundaryExit, "facet lies on the strip boundary");
  return r;
}

/// Index of the vertex of pivot(s, j) that is not a vertex of s.
[[nodiscard]] constexpr int entering_index(int j, int vertex_count) noexcept {
  if (j == 0) return vertex_count - 1;
  if (j == vertex_count - 1) return 0;
  return j;
}

/// Projected mesh size of the delta-scaled strip triangulation.
[[nodiscard]] inline double mesh_p(double delta, int n) { return delta * std::sqrt(static_cast<double>(n)); }

/// Barycentric coordinates of (c, 0) with respect to the layer-0 facet of s
/// (vertices 0..N). Solves the affine (N+1)x(N+1) system.
[[nodiscard]] inline Eigen::VectorXd layer0_barycentric(const Simplex& s, const Eigen::VectorXd& c) {
  const int n = s.dim();
  Eigen::MatrixXd A(n + 1, n + 1);
  Eigen::VectorXd rhs(n + 1);
  rhs[0] = 1.0;
  rhs.tail(n) = c;
  for (int j = 0; j <= n; ++j) {
    const Eigen::VectorXd y = s.vertex(j);
    A(0, j) = 1.0;
    A.block(1, j, n, 1) = y.head(n);
  }
  return A.partialPivLu().solve(rhs);
}

}  // namespace decay
