#pragma once

// Simplicial fixed-point (SFP) homotopy search for decay points
// w with Gamma_mu(w) << w.
//
// The homotopy theta(v, t) = (1 - t) c + t phi(v) is followed through the
// delta-scaled strip triangulation from the unique complete layer-0 facet
// containing (c, 0) to a complete layer-1 facet, using lexicographic
// pivoting on the labeling matrix L(tau) = [1 ... 1; l(y^1) ... l(y^{N+1})].
// phi is built so that its fixed points are decay points lying in region I.

#include <Eigen/Core>
#include <Eigen/LU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "decay/error.hpp"
#include "decay/gain_ops.hpp"
#include "decay/triangulation.hpp"

namespace decay {

struct SfpConfig {
  double norm = 1.0;
  double kappa_h = 2.0;
  double kappa_gamma = 3.0;
  double kappa_0 = 1.0;
  Vector c;
  double delta = 1.0;
  double refine_factor = 0.5;
  std::size_t max_pivots_per_level = 1'000'000;
  int max_refinements = 20;
  double dom_margin = 0.0;
  int refactor_interval = 50;

  void validate(int n) const {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::InvalidParameter, m); };
    if (!(norm > 0.0)) fail("norm must be positive");
    if (!(kappa_h > 0.0)) fail("kappa_h must be positive");
    if (!(kappa_gamma > kappa_h)) fail("kappa_gamma must exceed kappa_h");
    if (!(kappa_0 > 0.0)) fail("kappa_0 must be positive");
    if (!(delta > 0.0) || !std::isfinite(delta)) fail("delta must be positive");
    if (!(refine_factor > 0.0 && refine_factor < 1.0)) fail("refine_factor must lie in (0,1)");
    if (max_pivots_per_level == 0) fail("max_pivots_per_level must be positive");
    if (max_refinements < 0) fail("max_refinements must be nonnegative");
    if (!(dom_margin >= 0.0)) fail("dom_margin must be nonnegative");
    if (refactor_interval <= 0) fail("refactor_interval must be positive");
    if (c.size() != n) throw Error(ErrorKind::DimensionMismatch, "center has wrong length");
    if (!(c.array() > 0.0).all()) fail("center must be strictly positive");
    if (!(c.norm() < kappa_gamma / 2.0)) fail("center must lie in region I or II (|c| < kappa_gamma/2)");
  }
};

/// kappa_h = 2 norm, kappa_gamma = kappa_h + 1, kappa_0 = 1,
/// c = 0.99 kappa_h / (2 sqrt N) e, delta = kappa_h / N, refine factor 1/2.
[[nodiscard]] inline SfpConfig default_config(double norm, int n) {
  if (!(norm > 0.0) || !std::isfinite(norm)) throw Error(ErrorKind::InvalidParameter, "norm must be positive");
  if (n <= 0) throw Error(ErrorKind::InvalidParameter, "dimension must be positive");
  SfpConfig cfg;
  cfg.norm = norm;
  cfg.kappa_h = 2.0 * norm;
  cfg.kappa_gamma = cfg.kappa_h + 1.0;
  cfg.kappa_0 = 1.0;
  cfg.c = Vector::Constant(n, 0.99 * cfg.kappa_h / (2.0 * std::sqrt(static_cast<double>(n))));
  cfg.delta = cfg.kappa_h / n;
  cfg.refine_factor = 0.5;
  return cfg;
}

// ---------------------------------------------------------------------------
// phi, regions, labels
// ---------------------------------------------------------------------------

enum class Region { I, II, III, IV, V };

[[nodiscard]] constexpr std::string_view to_string(Region r) noexcept {
  switch (r) {
    case Region::I: return "I";
    case Region::II: return "II";
    case Region::III: return "III";
    case Region::IV: return "IV";
    case Region::V: return "V";
  }
  return "?";
}

[[nodiscard]] inline Region region_of_norm(double r, const SfpConfig& cfg) {
  if (r < cfg.kappa_h / 2.0) return Region::I;
  if (r < cfg.kappa_gamma / 2.0) return Region::II;
  if (r < cfg.kappa_gamma + cfg.kappa_0) return Region::III;
  if (r <= cfg.kappa_gamma + cfg.kappa_0 + cfg.delta) return Region::IV;
  return Region::V;
}

[[nodiscard]] inline Region region(const Vector& v, const SfpConfig& cfg) { return region_of_norm(v.norm(), cfg); }

/// phi(v) = Gamma(v) (1 + min{0, (kg - 2|v|)/(|v| + k0)}) + max{0, kh - 2|v|} e
[[nodiscard]] inline Vector phi(const Vector& v, const SfpConfig& cfg, const MonotoneOperator& op) {
  const double r = v.norm();
  const double scale = 1.0 + std::min(0.0, (cfg.kappa_gamma - 2.0 * r) / (r + cfg.kappa_0));
  const double lift = std::max(0.0, cfg.kappa_h - 2.0 * r);
  Vector out = op(v) * scale;
  out.array() += lift;
  return out;
}

/// l(y) = theta(y) - p1(y) for a strip vertex y = (v, t), t in {0, 1}.
[[nodiscard]] inline Vector label(const Vector& y, const SfpConfig& cfg, const MonotoneOperator& op) {
  const Eigen::Index n = y.size() - 1;
  const Vector v = y.head(n);
  if (y[n] == 0.0) return cfg.c - v;
  return phi(v, cfg, op) - v;
}

// ---------------------------------------------------------------------------
// Labeling state and lexicographic pivoting
// ---------------------------------------------------------------------------

inline constexpr double kPivotZeroTol = 1e-12;
inline constexpr double kInverseResidualTol = 1e-8;
inline constexpr double kConditionLimit = 1e12;
inline constexpr double kBarycentricTol = 1e-10;

/// Current complete facet tau (as slots of the full simplex eta) with its
/// labeling matrix L and W = L^{-1}. Row h of W belongs to slot h.
struct LabelState {
  Simplex eta;
  std::vector<LatticePoint> tau;
  Eigen::MatrixXd L;
  Eigen::MatrixXd W;
  int since_refactor = 0;

  [[nodiscard]] int size() const noexcept { return static_cast<int>(tau.size()); }
};

[[nodiscard]] inline bool lex_positive_row(const Eigen::MatrixXd& W, Eigen::Index row) {
  for (Eigen::Index k = 0; k < W.cols(); ++k) {
    if (W(row, k) > 0.0) return true;
    if (W(row, k) < 0.0) return false;
  }
  return false;
}

[[nodiscard]] inline bool lex_positive(const Eigen::MatrixXd& W) {
  for (Eigen::Index h = 0; h < W.rows(); ++h)
    if (!lex_positive_row(W, h)) return false;
  return true;
}

/// argmin_lex { W_h / p_h : p_h > zero_tol }. Ratios are compared entry by
/// entry; the first strict difference decides.
[[nodiscard]] inline std::optional<int> select_leaving(const Eigen::MatrixXd& W, const Vector& p,
                                                       double zero_tol = kPivotZeroTol) {
  std::optional<int> best;
  for (Eigen::Index h = 0; h < p.size(); ++h) {
    if (!(p[h] > zero_tol)) continue;
    if (!best) {
      best = static_cast<int>(h);
      continue;
    }
    const Eigen::Index g = *best;
    for (Eigen::Index k = 0; k < W.cols(); ++k) {
      const double a = W(h, k) / p[h];
      const double b = W(g, k) / p[g];
      if (a < b) {
        best = static_cast<int>(h);
        break;
      }
      if (a > b) break;
    }
  }
  return best;
}

/// Recomputes W = L^{-1} from scratch.
inline void refactorize(LabelState& st) {
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(st.L);
  if (!lu.isInvertible()) throw Error(ErrorKind::SingularLabeling, "labeling matrix is singular");
  st.W = lu.inverse();
  const double cond = st.L.cwiseAbs().colwise().sum().maxCoeff() * st.W.cwiseAbs().colwise().sum().maxCoeff();
  if (!(cond <= kConditionLimit)) {
    throw Error(ErrorKind::SingularLabeling, "labeling matrix condition estimate " + std::to_string(cond));
  }
  st.since_refactor = 0;
}

[[nodiscard]] inline Eigen::VectorXd label_column(const Vector& l) {
  Eigen::VectorXd q(l.size() + 1);
  q[0] = 1.0;
  q.tail(l.size()) = l;
  return q;
}

/// Start state: tau^0 = layer-0 facet of eta (vertices 0..N) with labels c - v.
[[nodiscard]] inline LabelState start_state(const Simplex& eta, const SfpConfig& cfg, const MonotoneOperator& op) {
  LabelState st;
  st.eta = eta;
  const int m = eta.dim() + 1;
  st.L.resize(m, m);
  for (int j = 0; j < m; ++j) {
    st.tau.push_back(eta.lattice_vertex(j));
    st.L.col(j) = label_column(label(eta.to_real(st.tau.back()), cfg, op));
  }
  refactorize(st);
  return st;
}

struct PivotStep {
  int slot = -1;         // zeta, the slot of tau that was replaced
  LatticePoint dropped;  // the vertex that left tau
};

/// One pivot of the path: brings y_plus (with label l_plus) into tau and drops the
/// lexicographically selected slot. The caller is responsible for moving eta
/// across the new facet.
inline PivotStep lex_pivot_step(LabelState& st, const LatticePoint& y_plus, const Vector& l_plus,
                          double zero_tol = kPivotZeroTol) {
  const Eigen::VectorXd q = label_column(l_plus);
  Eigen::VectorXd p = st.W * q;
  std::optional<int> zeta = select_leaving(st.W, p, zero_tol);
  if (!zeta) {
    refactorize(st);
    p = st.W * q;
    zeta = select_leaving(st.W, p, zero_tol);
    if (!zeta) throw Error(ErrorKind::NoPositivePivot, "no positive pivot coefficient");
  }
  const int z = *zeta;
  const Eigen::RowVectorXd pivot_row = st.W.row(z) / p[z];
  for (Eigen::Index h = 0; h < st.W.rows(); ++h) {
    if (h == z) continue;
    if (p[h] != 0.0) st.W.row(h) -= p[h] * pivot_row;
  }
  st.W.row(z) = pivot_row;
  st.L.col(z) = q;
  PivotStep step{z, std::move(st.tau[static_cast<std::size_t>(z)])};
  st.tau[static_cast<std::size_t>(z)] = y_plus;
  ++st.since_refactor;
  return step;
}

/// Convex combination v* = sum lambda_j v^j with lambda = first column of W.
[[nodiscard]] inline Vector extract_fixed_point(const LabelState& st) {
  const int n = st.eta.dim();
  const Eigen::VectorXd lambda = st.W.col(0);
  if ((lambda.array() < -kBarycentricTol).any()) {
    throw Error(ErrorKind::NegativeBarycentric, "negative barycentric weight in terminal facet");
  }
  Vector v = Vector::Zero(n);
  for (int j = 0; j < st.size(); ++j) {
    v += std::max(0.0, lambda[j]) * st.eta.to_real(st.tau[static_cast<std::size_t>(j)]).head(n);
  }
  return v.cwiseMax(0.0);
}

// ---------------------------------------------------------------------------
// Provable grid scale
// ---------------------------------------------------------------------------

/// Smallest k >= 1 with Gamma_max / (2k - 1) << c, where
/// Gamma_max = Gamma([kg + k0, ..., kg + k0]).
[[nodiscard]] inline int provable_k(const MonotoneOperator& op, const SfpConfig& cfg) {
  if (!(cfg.c.array() > 0.0).all()) throw Error(ErrorKind::InvalidParameter, "center must be strictly positive");
  const Vector gmax = op(Vector::Constant(op.dim(), cfg.kappa_gamma + cfg.kappa_0));
  const double ratio = (gmax.array() / cfg.c.array()).maxCoeff();
  // Gamma_max/(2k-1) < c  <=>  2k - 1 > ratio
  const auto fits = [&](int k) { return ((gmax / (2.0 * k - 1.0)).array() < cfg.c.array()).all(); };
  int k = std::max(1, static_cast<int>(std::floor((ratio + 1.0) / 2.0)));
  while (!fits(k)) ++k;
  while (k > 1 && fits(k - 1)) --k;
  return k;
}

/// 0.99 min{(kg - kh)/(2 sqrt N), (kg + 2 k0)/(2 k sqrt N)}.
[[nodiscard]] inline double provable_delta(const MonotoneOperator& op, const SfpConfig& cfg) {
  const double rn = std::sqrt(static_cast<double>(op.dim()));
  const int k = provable_k(op, cfg);
  return 0.99 * std::min((cfg.kappa_gamma - cfg.kappa_h) / (2.0 * rn),
                         (cfg.kappa_gamma + 2.0 * cfg.kappa_0) / (2.0 * k * rn));
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

struct DecayResult {
  Vector w;
  Vector gamma_w;
  std::size_t pivots = 0;
  int refinements = 0;
  double final_delta = 0.0;
  std::chrono::duration<double> wall_time{0.0};
  std::vector<std::size_t> level_pivots;

  /// w_i - Gamma_mu(w)_i
  [[nodiscard]] Vector margins() const { return w - gamma_w; }
};

/// Why a refinement level ended.
enum class LevelOutcome {
  Certified,
  NotCertified,
  LeftRegion,
  BoundaryExit,
  NoPositivePivot,
  SingularLabeling,
  NegativeBarycentric,
};

[[nodiscard]] constexpr std::string_view to_string(LevelOutcome o) noexcept {
  switch (o) {
    case LevelOutcome::Certified: return "certified";
    case LevelOutcome::NotCertified: return "not_certified";
    case LevelOutcome::LeftRegion: return "left_region";
    case LevelOutcome::BoundaryExit: return "boundary_exit";
    case LevelOutcome::NoPositivePivot: return "no_positive_pivot";
    case LevelOutcome::SingularLabeling: return "singular_labeling";
    case LevelOutcome::NegativeBarycentric: return "negative_barycentric";
  }
  return "?";
}

struct SfpOptions {
  /// Line-delimited JSON pivot trace, one record per pivot plus one per level.
  std::ostream* trace = nullptr;
  /// Checks L W = I on the first column after every pivot.
  bool check_residual = true;
};

namespace detail {

inline constexpr int kMaxCenterPerturbations = 8;

[[nodiscard]] inline Simplex locate_start(Vector& c, double delta) {
  const Eigen::Index n = c.size();
  Vector shift(n);
  for (Eigen::Index i = 0; i < n; ++i) shift[i] = delta * 1e-7 * static_cast<double>(i + 1) / static_cast<double>(n);
  for (int attempt = 0;; ++attempt) {
    try {
      return locate_simplex(c, delta);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateLocation || attempt >= kMaxCenterPerturbations) throw;
      c += shift;
    }
  }
}

struct LevelResult {
  LevelOutcome outcome = LevelOutcome::NotCertified;
  Vector v;
  std::size_t pivots = 0;
};

inline void trace_level(std::ostream* out, int level, double delta, const LevelResult& r) {
  if (!out) return;
  *out << "{\"event\":\"level\",\"level\":" << level << ",\"delta\":" << delta << ",\"pivots\":" << r.pivots
       << ",\"outcome\":\"" << to_string(r.outcome) << "\"}\n";
}

[[nodiscard]] inline LevelResult run_level(const MonotoneOperator& op, SfpConfig cfg, int level,
                                           const SfpOptions& opt) {
  LevelResult res;
  const int n = op.dim();
  const double outer = cfg.kappa_gamma + cfg.kappa_0;
  Simplex eta = locate_start(cfg.c, cfg.delta);
  LabelState st;
  try {
    st = start_state(eta, cfg, op);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::SingularLabeling) {
      res.outcome = LevelOutcome::SingularLabeling;
      return res;
    }
    throw;
  }

  int entering = n + 1;  // y+ of eta^0 is its single layer-1 vertex
  for (;;) {
    if (res.pivots >= cfg.max_pivots_per_level) {
      throw Error(ErrorKind::PivotBudgetExceeded,
                  "more than " + std::to_string(cfg.max_pivots_per_level) + " pivots at delta=" +
                      std::to_string(cfg.delta));
    }
    const LatticePoint y_plus = st.eta.lattice_vertex(entering);
    const Vector y = st.eta.to_real(y_plus);
    const Vector v = y.head(n);
    const double vnorm = v.norm();
    if (!(v.array() >= 0.0).all()) {
      res.outcome = LevelOutcome::BoundaryExit;
      return res;
    }
    if (vnorm >= outer) {
      res.outcome = LevelOutcome::LeftRegion;
      return res;
    }

    PivotStep step;
    try {
      step = lex_pivot_step(st, y_plus, label(y, cfg, op));
      if (st.since_refactor >= cfg.refactor_interval) {
        refactorize(st);
      } else if (opt.check_residual) {
        Eigen::VectorXd r = st.L * st.W.col(0);
        r[0] -= 1.0;
        if (r.lpNorm<Eigen::Infinity>() > kInverseResidualTol) refactorize(st);
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NoPositivePivot) {
        res.outcome = LevelOutcome::NoPositivePivot;
        return res;
      }
      if (e.kind() == ErrorKind::SingularLabeling) {
        res.outcome = LevelOutcome::SingularLabeling;
        return res;
      }
      throw;
    }
    ++res.pivots;

    int layer0 = 0;
    for (const auto& p : st.tau) layer0 += p.back() == 0 ? 1 : 0;

    if (opt.trace) {
      *opt.trace << "{\"event\":\"pivot\",\"level\":" << level << ",\"step\":" << res.pivots
                 << ",\"dropped\":" << step.slot << ",\"region\":\"" << to_string(region_of_norm(vnorm, cfg))
                 << "\",\"norm\":" << vnorm << "}\n";
    }

    if (layer0 == 0) {
      try {
        res.v = extract_fixed_point(st);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NegativeBarycentric) throw;
        res.outcome = LevelOutcome::NegativeBarycentric;
        return res;
      }
      res.outcome = LevelOutcome::NotCertified;
      return res;
    }
    if (layer0 == n + 1) {
      res.outcome = LevelOutcome::BoundaryExit;
      return res;
    }
    const int drop_index = st.eta.index_of(step.dropped);
    try {
      st.eta = pivot(st.eta, drop_index);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::BoundaryExit) throw;
      res.outcome = LevelOutcome::BoundaryExit;
      return res;
    }
    entering = entering_index(drop_index, st.eta.vertex_count());
  }
}

}  // namespace detail

/// Runs the SFP search with delta refinement until a certified decay point
/// with |w| < kappa_h / 2 is found.
[[nodiscard]] inline DecayResult sfp_run(const MonotoneOperator& op, const SfpConfig& cfg_in,
                                         const SfpOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg_in.validate(op.dim());
  if (!is_irreducible(op.gamma())) {
    throw Error(ErrorKind::Reducible, "gain matrix is not irreducible; strongly connected blocks " +
                                          format_blocks(strongly_connected_components(op.gamma().adjacency_lists())));
  }

  DecayResult out;
  SfpConfig cfg = cfg_in;
  std::vector<std::string> history;
  for (int level = 0; level <= cfg.max_refinements; ++level) {
    detail::LevelResult r = detail::run_level(op, cfg, level, opt);
    out.pivots += r.pivots;
    out.level_pivots.push_back(r.pivots);
    if (r.outcome == LevelOutcome::NotCertified) {
      const Vector g = op.apply(r.v);
      if (strictly_below(g, r.v, cfg.dom_margin) && r.v.norm() < cfg.kappa_h / 2.0) {
        r.outcome = LevelOutcome::Certified;
        detail::trace_level(opt.trace, level, cfg.delta, r);
        out.w = r.v;
        out.gamma_w = g;
        out.refinements = level;
        out.final_delta = cfg.delta;
        out.wall_time = std::chrono::steady_clock::now() - t0;
        return out;
      }
    }
    detail::trace_level(opt.trace, level, cfg.delta, r);
    history.emplace_back(to_string(r.outcome));
    cfg.delta *= cfg.refine_factor;
  }
  std::string msg = "no certified decay point after " + std::to_string(cfg.max_refinements) +
                    " refinements (outcomes:";
  for (const auto& h : history) msg += " " + h;
  msg += "); the small gain condition may fail on the search region, choose a smaller norm";
  throw Error(ErrorKind::RefinementExhausted, msg);
}

}  // namespace decay
