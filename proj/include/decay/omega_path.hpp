#pragma once

// Omega-paths through a decay point w: the orbit Gamma^k(w), its piecewise
// linear interpolation sigma on [0,1] with breakpoints sigma(1/k) =
// Gamma^{k-1}(w), componentwise inverses and the composite Lyapunov value
// V = max_i sigma_i^{-1}(V_i).

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "decay/error.hpp"
#include "decay/gain_ops.hpp"

namespace decay {

inline constexpr double kOrbitTolerance = 1e-9;
inline constexpr std::size_t kDefaultMaxOrbit = 10'000'000;

class OmegaPath {
 public:
  OmegaPath(std::vector<Vector> points, double tol) : points_(std::move(points)), tol_(tol) {
    if (points_.empty()) throw Error(ErrorKind::InvalidParameter, "empty orbit");
  }

  [[nodiscard]] int dim() const noexcept { return static_cast<int>(points_.front().size()); }
  [[nodiscard]] double tol() const noexcept { return tol_; }
  [[nodiscard]] const std::vector<Vector>& points() const noexcept { return points_; }
  [[nodiscard]] const Vector& w() const noexcept { return points_.front(); }

  /// K: index of the last stored iterate, the first k with |Gamma^k(w)| < tol.
  [[nodiscard]] std::size_t k_step() const noexcept { return points_.size() - 1; }

  /// Affine piece k (r in (1/(k+1), 1/k]) evaluated at r, for 1 <= k <= K.
  [[nodiscard]] double piece(std::size_t k, double r, int i) const {
    const double kk = static_cast<double>(k);
    return (kk * kk + kk) * ((1.0 / kk - r) * points_[k][i] + (r - 1.0 / (kk + 1.0)) * points_[k - 1][i]);
  }

  [[nodiscard]] Vector sigma(double r) const {
    if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorKind::OutOfRange, "sigma argument outside [0,1]");
    const int n = dim();
    if (r == 0.0) return Vector::Zero(n);
    const std::size_t K = k_step();
    // Tail: one affine piece from 0 to Gamma^K(w) on (0, 1/(K+1)].
    if (r <= 1.0 / (static_cast<double>(K) + 1.0)) return points_[K] * (r * (static_cast<double>(K) + 1.0));
    std::size_t k = static_cast<std::size_t>(std::floor(1.0 / r));
    // r in (1/(k+1), 1/k]; floor may be off by one at exact breakpoints.
    while (k > 1 && r > 1.0 / static_cast<double>(k)) --k;
    while (r <= 1.0 / (static_cast<double>(k) + 1.0)) ++k;
    if (r == 1.0 / static_cast<double>(k)) return points_[k - 1];
    Vector out(n);
    for (int i = 0; i < n; ++i) out[i] = piece(k, r, i);
    return out;
  }

  /// The unique r with sigma_i(r) = value, 0 <= value <= w_i.
  [[nodiscard]] double sigma_inverse(int i, double value) const {
    if (i < 0 || i >= dim()) throw Error(ErrorKind::DimensionMismatch, "component index out of range");
    const double wi = points_.front()[i];
    if (!(value >= 0.0)) throw Error(ErrorKind::OutOfRange, "negative Lyapunov value");
    if (value > wi) {
      throw Error(ErrorKind::OutOfRange,
                  "value " + std::to_string(value) + " exceeds w_" + std::to_string(i) + " = " + std::to_string(wi));
    }
    if (value == 0.0) return 0.0;
    const std::size_t K = k_step();
    const double pk = points_[K][i];
    if (value <= pk) return value / ((static_cast<double>(K) + 1.0) * pk);
    // Breakpoint values points_[k][i] decrease in k; find k with
    // points_[k][i] < value <= points_[k-1][i].
    std::size_t lo = 1, hi = K;  // invariant: points_[lo-1] >= value, points_[hi] < value
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (points_[mid][i] < value) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    const std::size_t k = lo;
    const double kk = static_cast<double>(k);
    const double hi_v = points_[k - 1][i];
    const double lo_v = points_[k][i];
    if (value == hi_v) return 1.0 / kk;
    return 1.0 / (kk + 1.0) + (value - lo_v) / ((kk * kk + kk) * (hi_v - lo_v));
  }

  /// V = max_i sigma_i^{-1}(V_i).
  [[nodiscard]] double lyapunov_value(const Vector& subsystem_values) const {
    if (subsystem_values.size() != dim()) throw Error(ErrorKind::DimensionMismatch, "one value per subsystem");
    double v = 0.0;
    for (int i = 0; i < dim(); ++i) v = std::max(v, sigma_inverse(i, subsystem_values[i]));
    return v;
  }

 private:
  std::vector<Vector> points_;
  double tol_;
};

/// Orbit w, Gamma(w), Gamma^2(w), ... until |Gamma^k(w)| < tol.
[[nodiscard]] inline OmegaPath iterate_decay(const MonotoneOperator& op, const Vector& w,
                                             double tol = kOrbitTolerance,
                                             std::size_t max_k = kDefaultMaxOrbit) {
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidParameter, "orbit tolerance must be positive");
  Vector next = op(w);
  if (!strictly_below(next, w)) throw Error(ErrorKind::NotDecayPoint, "Gamma(w) << w does not hold");
  std::vector<Vector> pts{w};
  double prev_norm = w.norm();
  while (prev_norm >= tol) {
    if (pts.size() > max_k) {
      throw Error(ErrorKind::NoConvergence, "orbit did not reach tolerance within " + std::to_string(max_k) +
                                                " steps; last norms " + std::to_string(prev_norm) + ", " +
                                                std::to_string(pts[pts.size() - 2].norm()));
    }
    Vector after = op.apply(next);
    if (!strictly_below(next, pts.back())) {
      throw Error(ErrorKind::NoConvergence, "orbit stopped decreasing strictly at k=" + std::to_string(pts.size()) +
                                                "; last norms " + std::to_string(pts.back().norm()) + ", " +
                                                std::to_string(next.norm()));
    }
    prev_norm = next.norm();
    pts.push_back(std::move(next));
    next = std::move(after);
  }
  return OmegaPath(std::move(pts), tol);
}

[[nodiscard]] inline Vector sigma(double r, const OmegaPath& path) { return path.sigma(r); }
[[nodiscard]] inline double sigma_inverse(int i, double value, const OmegaPath& path) {
  return path.sigma_inverse(i, value);
}
[[nodiscard]] inline double lyapunov_value(const Vector& values, const OmegaPath& path) {
  return path.lyapunov_value(values);
}

/// Grid points t in (0,1] where Gamma(t w) << t w fails: the straight line
/// from 0 to w is generally not an Omega-path.
[[nodiscard]] inline std::vector<double> straight_line_violations(const MonotoneOperator& op, const Vector& w,
                                                                  const std::vector<double>& grid) {
  std::vector<double> bad;
  for (double t : grid) {
    const Vector x = t * w;
    if (!strictly_below(op.apply(x), x)) bad.push_back(t);
  }
  return bad;
}

/// j/count for j = 1..count, followed by log-spaced points down to 10^-decades.
[[nodiscard]] inline std::vector<double> diagnostic_grid(int count = 1000, int decades = 9) {
  std::vector<double> g;
  for (int j = 1; j <= count; ++j) g.push_back(static_cast<double>(j) / count);
  for (int k = 1; k <= 10 * decades; ++k) g.push_back(std::pow(10.0, -static_cast<double>(k) / 10.0));
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

}  // namespace decay
