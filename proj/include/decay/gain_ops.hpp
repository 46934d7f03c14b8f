#pragma once

// Gain functions, gain matrices, monotone aggregation functions and the
// induced gain operator  Gamma_mu(s)_i = mu_i(gamma_i1(s_1), ..., gamma_iN(s_N)).

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "decay/error.hpp"

namespace decay {

using Vector = Eigen::VectorXd;

inline constexpr int kDefaultPropertySamples = 64;

// ---------------------------------------------------------------------------
// Componentwise order on R^n
// ---------------------------------------------------------------------------

/// a <= b componentwise.
[[nodiscard]] inline bool leq(const Vector& a, const Vector& b) {
  return a.size() == b.size() && (a.array() <= b.array()).all();
}

/// a << b: a_i < b_i and b_i - a_i >= margin for every i.
[[nodiscard]] inline bool strictly_below(const Vector& a, const Vector& b, double margin = 0.0) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!(a[i] < b[i]) || b[i] - a[i] < margin) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// GainSpec
// ---------------------------------------------------------------------------

/// A scalar gain: either identically zero or a class-K-infinity function from
/// a closed parametric family. `Custom` wraps an arbitrary pure evaluator whose
/// K-infinity properties are checked by sampling only.
class GainSpec {
 public:
  enum class Kind { Zero, Linear, Power, LogExp, Custom };
  using Evaluator = std::function<double(double)>;

  GainSpec() = default;

  static GainSpec zero() { return GainSpec{}; }

  static GainSpec linear(double a) {
    require_positive(a, "linear gain coefficient");
    GainSpec g;
    g.kind_ = Kind::Linear;
    g.a_ = a;
    return g;
  }

  /// s -> a * s^p
  static GainSpec power(double a, double p) {
    require_positive(a, "power gain coefficient");
    require_positive(p, "power gain exponent");
    GainSpec g;
    g.kind_ = Kind::Power;
    g.a_ = a;
    g.p_ = p;
    return g;
  }

  /// s -> 0.5 * ln(1 + coef * (exp(sqrt(2 s)) - 1))^2
  static GainSpec log_exp(double coef) {
    require_positive(coef, "log-exp gain coefficient");
    GainSpec g;
    g.kind_ = Kind::LogExp;
    g.a_ = coef;
    return g;
  }

  static GainSpec custom(Evaluator fn, int samples = kDefaultPropertySamples) {
    if (!fn) throw Error(ErrorKind::InvalidParameter, "custom gain without evaluator");
    GainSpec g;
    g.kind_ = Kind::Custom;
    g.fn_ = std::make_shared<const Evaluator>(std::move(fn));
    g.check_k_infinity(samples);
    return g;
  }

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] bool is_zero() const noexcept { return kind_ == Kind::Zero; }
  [[nodiscard]] double coef() const noexcept { return a_; }
  [[nodiscard]] double exponent() const noexcept { return p_; }

  [[nodiscard]] double operator()(double s) const {
    switch (kind_) {
      case Kind::Zero: return 0.0;
      case Kind::Linear: return a_ * s;
      case Kind::Power: return s == 0.0 ? 0.0 : a_ * std::pow(s, p_);
      case Kind::LogExp: return log_exp_eval(a_, s);
      case Kind::Custom: return s == 0.0 ? 0.0 : (*fn_)(s);
    }
    return 0.0;
  }

  friend bool operator==(const GainSpec& x, const GainSpec& y) {
    if (x.kind_ != y.kind_) return false;
    if (x.kind_ == Kind::Custom) return x.fn_ == y.fn_;
    return x.a_ == y.a_ && x.p_ == y.p_;
  }

 private:
  static void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::InvalidParameter, std::string(what) + " must be positive and finite");
    }
  }

  static double log_exp_eval(double coef, double s) {
    if (s <= 0.0) return 0.0;
    const double x = std::sqrt(2.0 * s);
    // ln(1 + coef (e^x - 1)) = x + ln(coef + (1 - coef) e^-x) avoids overflow for large x.
    const double l = x > 30.0 ? x + std::log(coef + (1.0 - coef) * std::exp(-x))
                              : std::log1p(coef * std::expm1(x));
    return 0.5 * l * l;
  }

  void check_k_infinity(int samples) const {
    const double at_zero = (*fn_)(0.0);
    if (at_zero != 0.0) throw Error(ErrorKind::InvalidParameter, "custom gain must vanish at 0");
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_real_distribution<double> expo(-6.0, 4.0);
    std::vector<double> pts;
    pts.reserve(static_cast<std::size_t>(std::max(samples, 2)));
    for (int k = 0; k < std::max(samples, 2); ++k) pts.push_back(std::pow(10.0, expo(rng)));
    std::sort(pts.begin(), pts.end());
    double prev = 0.0;
    for (double s : pts) {
      const double v = (*fn_)(s);
      if (!std::isfinite(v) || !(v > prev)) {
        throw Error(ErrorKind::InvalidParameter,
                    "custom gain is not strictly increasing near s=" + std::to_string(s));
      }
      prev = v;
    }
  }

  Kind kind_ = Kind::Zero;
  double a_ = 0.0;
  double p_ = 1.0;
  std::shared_ptr<const Evaluator> fn_;
};

// ---------------------------------------------------------------------------
// GainMatrix
// ---------------------------------------------------------------------------

class GainMatrix {
 public:
  GainMatrix() = default;
  explicit GainMatrix(int n) : n_(n), entries_(static_cast<std::size_t>(n) * n) {
    if (n <= 0) throw Error(ErrorKind::InvalidParameter, "gain matrix dimension must be positive");
  }

  [[nodiscard]] int dim() const noexcept { return n_; }

  [[nodiscard]] const GainSpec& at(int i, int j) const { return entries_[index(i, j)]; }
  void set(int i, int j, GainSpec g) { entries_[index(i, j)] = std::move(g); }

  /// Adjacency pattern A_Gamma: a_ij = 1 iff gamma_ij is not identically zero.
  [[nodiscard]] std::vector<std::vector<int>> adjacency_lists() const {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        if (!at(i, j).is_zero()) adj[static_cast<std::size_t>(i)].push_back(j);
    return adj;
  }

 private:
  [[nodiscard]] std::size_t index(int i, int j) const {
    if (i < 0 || j < 0 || i >= n_ || j >= n_) {
      throw Error(ErrorKind::DimensionMismatch, "gain matrix index out of range");
    }
    return static_cast<std::size_t>(i) * n_ + j;
  }

  int n_ = 0;
  std::vector<GainSpec> entries_;
};

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// Monotone aggregation function mu: R^n_+ -> R_+.
class Aggregation {
 public:
  enum class Kind { Sum, Max, Custom };
  using Evaluator = std::function<double(std::span<const double>)>;

  Aggregation() = default;
  static Aggregation sum() { return Aggregation{}; }
  static Aggregation max() {
    Aggregation m;
    m.kind_ = Kind::Max;
    return m;
  }

  /// `n` is the input dimension used for the sampled property checks
  /// (positivity, strict increase, mu(0) = 0).
  static Aggregation custom(Evaluator fn, int n, int samples = kDefaultPropertySamples) {
    if (!fn) throw Error(ErrorKind::InvalidParameter, "custom aggregation without evaluator");
    Aggregation m;
    m.kind_ = Kind::Custom;
    m.fn_ = std::make_shared<const Evaluator>(std::move(fn));
    m.check_properties(n, samples);
    return m;
  }

  [[nodiscard]] Kind kind() const noexcept { return kind_; }

  [[nodiscard]] double operator()(std::span<const double> s) const {
    switch (kind_) {
      case Kind::Sum: {
        double acc = 0.0;
        for (double x : s) acc += x;
        return acc;
      }
      case Kind::Max: {
        double m = 0.0;
        for (double x : s) m = std::max(m, x);
        return m;
      }
      case Kind::Custom: return (*fn_)(s);
    }
    return 0.0;
  }

  friend bool operator==(const Aggregation& x, const Aggregation& y) {
    return x.kind_ == y.kind_ && x.fn_ == y.fn_;
  }

 private:
  void check_properties(int n, int samples) const {
    if (n <= 0) throw Error(ErrorKind::InvalidParameter, "aggregation dimension must be positive");
    const std::vector<double> zero(static_cast<std::size_t>(n), 0.0);
    if ((*fn_)(zero) != 0.0) throw Error(ErrorKind::InvalidParameter, "custom aggregation must vanish at 0");
    std::mt19937_64 rng(0xa66ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> s(static_cast<std::size_t>(n)), t(static_cast<std::size_t>(n));
    for (int k = 0; k < samples; ++k) {
      const double scale = std::pow(10.0, 4.0 * unit(rng) - 3.0) / n;
      for (int i = 0; i < n; ++i) {
        s[static_cast<std::size_t>(i)] = scale * unit(rng);
        t[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i)] + scale * (0.01 + unit(rng));
      }
      const double ms = (*fn_)(s);
      const double mt = (*fn_)(t);
      // Raising a single component must also raise mu.
      std::vector<double> u = s;
      u[static_cast<std::size_t>(k % n)] = t[static_cast<std::size_t>(k % n)];
      const double mu = (*fn_)(u);
      if (!(ms > 0.0) || !(mt > ms) || !(mu > ms) || !std::isfinite(mt)) {
        throw Error(ErrorKind::InvalidParameter, "custom aggregation failed positivity/strict increase sample");
      }
    }
  }

  Kind kind_ = Kind::Sum;
  std::shared_ptr<const Evaluator> fn_;
};

// ---------------------------------------------------------------------------
// MonotoneOperator
// ---------------------------------------------------------------------------

class MonotoneOperator {
 public:
  MonotoneOperator() = default;
  MonotoneOperator(GainMatrix gamma, std::vector<Aggregation> mu)
      : gamma_(std::move(gamma)), mu_(std::move(mu)) {
    if (static_cast<int>(mu_.size()) != gamma_.dim()) {
      throw Error(ErrorKind::DimensionMismatch, "one aggregation per row is required");
    }
    nonzero_.resize(mu_.size());
    for (int i = 0; i < dim(); ++i)
      for (int j = 0; j < dim(); ++j)
        if (!gamma_.at(i, j).is_zero()) nonzero_[static_cast<std::size_t>(i)].push_back(j);
  }

  /// Same aggregation on every row.
  MonotoneOperator(GainMatrix gamma, Aggregation mu)
      : MonotoneOperator(gamma, std::vector<Aggregation>(static_cast<std::size_t>(gamma.dim()), mu)) {}

  [[nodiscard]] int dim() const noexcept { return gamma_.dim(); }
  [[nodiscard]] const GainMatrix& gamma() const noexcept { return gamma_; }
  [[nodiscard]] const std::vector<Aggregation>& aggregations() const noexcept { return mu_; }

  [[nodiscard]] Vector operator()(const Vector& s) const {
    if (s.size() != dim()) throw Error(ErrorKind::DimensionMismatch, "operator input has wrong length");
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      if (s[j] < 0.0 || std::isnan(s[j])) throw Error(ErrorKind::NegativeInput, "operator input must be >= 0");
    }
    return apply(s);
  }

  /// Evaluation without the input checks; callers guarantee s >= 0.
  [[nodiscard]] Vector apply(const Vector& s) const {
    const int n = dim();
    Vector out(n);
    std::vector<double> buf;
    for (int i = 0; i < n; ++i) {
      const auto& row = nonzero_[static_cast<std::size_t>(i)];
      const Aggregation& mu = mu_[static_cast<std::size_t>(i)];
      if (mu.kind() == Aggregation::Kind::Custom) {
        buf.assign(static_cast<std::size_t>(n), 0.0);
        for (int j : row) buf[static_cast<std::size_t>(j)] = gamma_.at(i, j)(s[j]);
      } else {
        buf.clear();
        for (int j : row) buf.push_back(gamma_.at(i, j)(s[j]));
      }
      out[i] = mu(buf);
    }
    return out;
  }

 private:
  GainMatrix gamma_;
  std::vector<Aggregation> mu_;
  std::vector<std::vector<int>> nonzero_;
};

[[nodiscard]] inline Vector eval_operator(const MonotoneOperator& op, const Vector& s) { return op(s); }

// ---------------------------------------------------------------------------
// Structure checks
// ---------------------------------------------------------------------------

/// Strongly connected components (Tarjan, iterative). Components are listed
/// in reverse topological order; vertices within a component ascending.
[[nodiscard]] inline std::vector<std::vector<int>> strongly_connected_components(
    const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
  std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
  std::vector<int> stack;
  std::vector<std::pair<int, std::size_t>> call;  // (vertex, next edge)
  std::vector<std::vector<int>> comps;
  int counter = 0;

  for (int root = 0; root < n; ++root) {
    if (index[static_cast<std::size_t>(root)] != -1) continue;
    call.emplace_back(root, 0);
    while (!call.empty()) {
      auto& [v, e] = call.back();
      const auto uv = static_cast<std::size_t>(v);
      if (e == 0 && index[uv] == -1) {
        index[uv] = low[uv] = counter++;
        stack.push_back(v);
        on_stack[uv] = 1;
      }
      if (e < adj[uv].size()) {
        const int w = adj[uv][e++];
        const auto uw = static_cast<std::size_t>(w);
        if (index[uw] == -1) {
          call.emplace_back(w, 0);
        } else if (on_stack[uw]) {
          low[uv] = std::min(low[uv], index[uw]);
        }
        continue;
      }
      if (low[uv] == index[uv]) {
        std::vector<int> comp;
        int w = -1;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[static_cast<std::size_t>(w)] = 0;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
      }
      const int finished = v;
      call.pop_back();
      if (!call.empty()) {
        const auto up = static_cast<std::size_t>(call.back().first);
        low[up] = std::min(low[up], low[static_cast<std::size_t>(finished)]);
      }
    }
  }
  return comps;
}

[[nodiscard]] inline bool is_irreducible(const GainMatrix& gamma) {
  if (gamma.dim() == 0) return false;
  return strongly_connected_components(gamma.adjacency_lists()).size() == 1;
}

/// Necessary-condition sampler for Gamma_mu(s) !>= s: returns the first
/// sample s with Gamma_mu(s) >= s, or nullopt.
/// Points for the sampled small-gain check: the diagonal e*r/sqrt(n) and the
/// coordinate axes at log-spaced radii up to `radius`, plus `count` random
/// nonnegative directions with random radii.
[[nodiscard]] inline std::vector<Vector> orthant_samples(int n, double radius, int count, std::uint64_t seed) {
  std::vector<Vector> pts;
  for (int k = 0; k <= 60; ++k) {
    const double r = radius * std::pow(10.0, -k / 10.0);
    pts.push_back(Vector::Constant(n, r / std::sqrt(static_cast<double>(n))));
    for (int i = 0; i < n; ++i) pts.push_back(Vector::Unit(n, i) * r);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < count; ++k) {
    Vector d(n);
    for (int i = 0; i < n; ++i) d[i] = u(rng);
    if (d.norm() == 0.0) continue;
    pts.push_back(d.normalized() * (radius * u(rng)));
  }
  return pts;
}

/// "{0,2} {1}" style rendering of a block partition.
[[nodiscard]] inline std::string format_blocks(const std::vector<std::vector<int>>& blocks) {
  std::string out;
  for (const auto& b : blocks) {
    if (!out.empty()) out += ' ';
    out += '{';
    for (std::size_t k = 0; k < b.size(); ++k) out += (k ? "," : "") + std::to_string(b[k]);
    out += '}';
  }
  return out;
}

[[nodiscard]] inline std::optional<Vector> check_small_gain_sampled(const MonotoneOperator& op,
                                                                    std::span<const Vector> points) {
  for (const Vector& s : points) {
    if (leq(s, op(s))) return s;
  }
  return std::nullopt;
}

}  // namespace decay
