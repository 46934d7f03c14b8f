#pragma once

// Benchmark families: quasi-monotone linear systems under the coordinate
// change S, and the biochemical control circuit model (monod kinetics).

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "decay/error.hpp"
#include "decay/gain_ops.hpp"
#include "decay/omega_path.hpp"
#include "decay/sfp_solver.hpp"

namespace decay {

// ---------------------------------------------------------------------------
// Coordinate change S
// ---------------------------------------------------------------------------

[[nodiscard]] inline double s_scalar(double v) {
  if (v > 1.0) return std::exp(v - 1.0);
  if (v < -1.0) return -std::exp(-v - 1.0);
  return v;
}

[[nodiscard]] inline double s_inverse_scalar(double v) {
  if (v > 1.0) return 1.0 + std::log(v);
  if (v < -1.0) return -1.0 - std::log(-v);
  return v;
}

[[nodiscard]] inline Vector s_transform(const Vector& v) { return v.unaryExpr([](double x) { return s_scalar(x); }); }
[[nodiscard]] inline Vector s_inverse(const Vector& v) {
  return v.unaryExpr([](double x) { return s_inverse_scalar(x); });
}

// ---------------------------------------------------------------------------
// Seeds and spectral oracle
// ---------------------------------------------------------------------------

/// splitmix64 finaliser; derive(seed, a, b) gives independent child seeds.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept {
  return mix64(mix64(mix64(seed) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

struct PerronEstimate {
  double rho = 0.0;
  Vector vector;  // positive, unit 1-norm
  int iterations = 0;
};

/// Perron root of a nonnegative irreducible matrix by power iteration on
/// P + I (primitive, so the iteration converges even for periodic P).
[[nodiscard]] inline PerronEstimate perron(const Eigen::MatrixXd& P, double tol = 1e-10, int max_iter = 200000) {
  const Eigen::Index n = P.rows();
  Vector x = Vector::Constant(n, 1.0 / static_cast<double>(n));
  double lambda = 0.0;
  PerronEstimate est;
  for (int it = 1; it <= max_iter; ++it) {
    Vector y = P * x + x;
    const double next = y.sum();  // x has unit 1-norm
    y /= next;
    const double change = (y - x).lpNorm<Eigen::Infinity>();
    x = std::move(y);
    est.iterations = it;
    if (std::abs(next - lambda) <= tol * std::max(1.0, next) && change <= tol) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  // min_i and max_i of (Px)_i / x_i bracket rho; report the midpoint.
  const Vector px = P * x;
  const Vector ratio = px.array() / x.array();
  est.rho = 0.5 * (ratio.minCoeff() + ratio.maxCoeff());
  est.vector = x;
  return est;
}

[[nodiscard]] inline bool pattern_irreducible(const Eigen::MatrixXd& P) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(P.rows()));
  for (Eigen::Index i = 0; i < P.rows(); ++i)
    for (Eigen::Index j = 0; j < P.cols(); ++j)
      if (P(i, j) != 0.0) adj[static_cast<std::size_t>(i)].push_back(static_cast<int>(j));
  return strongly_connected_components(adj).size() == 1;
}

/// Linear gains gamma_ij(s) = P_ij s with Sum aggregation.
[[nodiscard]] inline MonotoneOperator linear_operator(const Eigen::MatrixXd& P) {
  const int n = static_cast<int>(P.rows());
  GainMatrix g(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (P(i, j) > 0.0) g.set(i, j, GainSpec::linear(P(i, j)));
  return MonotoneOperator(std::move(g), Aggregation::sum());
}

// ---------------------------------------------------------------------------
// Quasi-monotone systems
// ---------------------------------------------------------------------------

inline constexpr double kQmsSpectralRadius = 0.8;
inline constexpr double kQmsZeroFraction = 0.3;
inline constexpr int kMaxRedraws = 100;

struct QmsInstance {
  int n = 0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd P;  // rho(P) = 0.8 after scaling
  int draws = 0;
};

/// Nonnegative matrix with U[0,1] entries, each zeroed with probability 0.3,
/// redrawn until the pattern is irreducible, then scaled to rho(P) = target.
[[nodiscard]] inline QmsInstance draw_qms(int n, std::uint64_t seed, double target_rho = kQmsSpectralRadius) {
  if (n < 2) throw Error(ErrorKind::InvalidParameter, "quasi-monotone benchmark needs n >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution drop(kQmsZeroFraction);
  QmsInstance inst;
  inst.n = n;
  inst.seed = seed;
  for (int draw = 1; draw <= kMaxRedraws; ++draw) {
    Eigen::MatrixXd P(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double x = unit(rng);
        P(i, j) = drop(rng) ? 0.0 : x;
      }
    if (!pattern_irreducible(P)) continue;
    const PerronEstimate pe = perron(P);
    inst.P = P * (target_rho / pe.rho);
    inst.draws = draw;
    return inst;
  }
  throw Error(ErrorKind::ReducibleDraw, "no irreducible pattern in " + std::to_string(kMaxRedraws) + " draws");
}

/// T(v) = S(P S^{-1}(v)): gains P_ij S^{-1}(s), aggregation S(sum).
/// Since S' > 0, T(v) << v  <=>  P S^{-1}(v) << S^{-1}(v)  <=>  A S^{-1}(v) << 0.
[[nodiscard]] inline MonotoneOperator qms_operator(const Eigen::MatrixXd& P) {
  const int n = static_cast<int>(P.rows());
  GainMatrix g(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double a = P(i, j);
      if (a > 0.0) g.set(i, j, GainSpec::custom([a](double s) { return a * s_inverse_scalar(s); }));
    }
  const Aggregation mu = Aggregation::custom(
      [](std::span<const double> x) {
        double acc = 0.0;
        for (double t : x) acc += t;
        return s_scalar(acc);
      },
      n);
  return MonotoneOperator(std::move(g), mu);
}

[[nodiscard]] inline MonotoneOperator gen_qms(int n, std::uint64_t seed) { return qms_operator(draw_qms(n, seed).P); }

/// Componentwise slack of A S^{-1}(w) << 0 with A = -I + P (positive = satisfied).
[[nodiscard]] inline Vector qms_certificate(const Eigen::MatrixXd& P, const Vector& w) {
  const Vector z = s_inverse(w);
  return z - P * z;
}

// ---------------------------------------------------------------------------
// Biochemical control circuit model
// ---------------------------------------------------------------------------

struct BccmInstance {
  int n = 3;
  std::vector<double> a;  // a_1..a_N
  double b = 8.0;
  double c_monod = 1.0;
  double theta = 0.8;
  double zeta = 1.1;
  std::vector<std::pair<std::pair<int, int>, GainSpec>> perturbations;

  [[nodiscard]] double a_product() const {
    double p = 1.0;
    for (double x : a) p *= x;
    return p;
  }
  /// x_N* = (b - a c) / a
  [[nodiscard]] double x_star() const { return (b - a_product() * c_monod) / a_product(); }
  [[nodiscard]] double k_const() const { return c_monod; }
  [[nodiscard]] double lambda() const { return c_monod / (c_monod + x_star()); }
  [[nodiscard]] double theta_lower() const { return std::max(k_const() / (k_const() + x_star()), lambda()); }
  [[nodiscard]] double zeta_upper() const { return std::pow(theta, -1.0 / (n - 1)); }

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::InvalidParameter, m); };
    if (n < 2) fail("BCCM needs n >= 2");
    if (static_cast<int>(a.size()) != n) fail("BCCM needs one a_i per state");
    for (double x : a)
      if (!(x > 0.0)) fail("a_i must be positive");
    if (!(b > 0.0 && c_monod > 0.0)) fail("monod parameters must be positive");
    if (!(b > a_product() * c_monod)) fail("monod parameters must satisfy b > a c");
    if (!(theta > theta_lower() && theta < 1.0)) {
      fail("theta outside (" + std::to_string(theta_lower()) + ", 1)");
    }
    if (!(zeta > 1.0 && zeta < zeta_upper())) fail("zeta outside (1, " + std::to_string(zeta_upper()) + ")");
  }
};

[[nodiscard]] inline MonotoneOperator bccm_operator(const BccmInstance& inst) {
  inst.validate();
  const int n = inst.n;
  GainMatrix g(n);
  g.set(0, n - 1, GainSpec::log_exp(inst.theta));
  for (int i = 1; i < n; ++i) g.set(i, i - 1, GainSpec::log_exp(inst.zeta));
  for (const auto& [ij, gain] : inst.perturbations) g.set(ij.first, ij.second, gain);
  return MonotoneOperator(std::move(g), Aggregation::sum());
}

/// Perturbed three-state circuit: a = (2, 1, 3), b = 8, c = 1, theta = 0.8,
/// zeta = 1.1, perturbations 0.001 s on (1,1), coef31 s^2 on (3,1),
/// 0.001 s^0.9 on (2,2) and 0.001 s^2 on (3,3). The reference decay point
/// [6.54 6.90 7.33] with image [6.527 6.886 7.325] needs coef31 = 5e-4.
inline constexpr double kPerturbedBccmCoef31 = 5e-4;

[[nodiscard]] inline BccmInstance perturbed_bccm3(double coef31 = kPerturbedBccmCoef31) {
  BccmInstance inst;
  inst.n = 3;
  inst.a = {2.0, 1.0, 3.0};
  inst.b = 8.0;
  inst.c_monod = 1.0;
  inst.theta = 0.8;
  inst.zeta = 1.1;
  inst.perturbations = {
      {{0, 0}, GainSpec::linear(0.001)},
      {{2, 0}, GainSpec::power(coef31, 2.0)},
      {{1, 1}, GainSpec::power(0.001, 0.9)},
      {{2, 2}, GainSpec::power(0.001, 2.0)},
  };
  return inst;
}

/// a_i = (i+1)/i, b = 2N, c = 1.
[[nodiscard]] inline BccmInstance bccm_family(int n, double theta, double zeta) {
  BccmInstance inst;
  inst.n = n;
  inst.a.resize(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) inst.a[static_cast<std::size_t>(i - 1)] = static_cast<double>(i + 1) / i;
  inst.b = 2.0 * n;
  inst.c_monod = 1.0;
  inst.theta = theta;
  inst.zeta = zeta;
  return inst;
}

/// (theta, zeta) for the scaled circuit family: fixed pairs for the table
/// sizes, otherwise theta = max(0.75, midpoint of its window) and zeta at 60%
/// of its admissible window.
[[nodiscard]] inline std::pair<double, double> bccm_family_parameters(int n) {
  static const std::map<int, std::pair<double, double>> table = {
      {10, {0.75, 1.020}}, {50, {0.75, 1.003}},  {70, {0.75, 1.002}},  {90, {0.75, 1.002}},
      {110, {0.70, 1.002}}, {150, {0.70, 1.001}}, {200, {0.70, 1.001}},
  };
  if (n < 2) throw Error(ErrorKind::InvalidParameter, "BCCM needs n >= 2");
  if (auto it = table.find(n); it != table.end()) return it->second;
  // theta_lower = (N+1)/(2N) for this family.
  const double theta = std::max(0.75, 0.5 * (1.0 + (n + 1.0) / (2.0 * n)));
  return {theta, 1.0 + 0.6 * (std::pow(theta, -1.0 / (n - 1)) - 1.0)};
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

enum class Family { Qms, Bccm };

[[nodiscard]] inline std::string_view to_string(Family f) noexcept { return f == Family::Qms ? "qms" : "bccm"; }

struct TrialRecord {
  int dim = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  bool converged = false;
  std::size_t pivots = 0;
  int refinements = 0;
  long k_step = -1;  // orbit length to |Gamma^k(w)| < 1e-9 (BCCM only)
  double wall_ms = 0.0;
  double min_margin = 0.0;       // min_i w_i - Gamma(w)_i
  double min_certificate = 0.0;  // QMS: min_i (S^{-1}(w) - P S^{-1}(w))_i
  bool perron_ok = true;         // QMS: Perron vector u has P u << u
  std::string error;
};

struct SuiteRow {
  int dim = 0;
  int trials = 0;
  int failures = 0;
  double mean_wall_ms = 0.0;
  double mean_pivots = 0.0;
  double mean_refinements = 0.0;
  double mean_k_step = 0.0;
};

struct SuiteReport {
  Family family = Family::Qms;
  double norm = 10.0;
  std::vector<SuiteRow> rows;
  std::vector<TrialRecord> trials;

  [[nodiscard]] int failures() const {
    int f = 0;
    for (const auto& r : rows) f += r.failures;
    return f;
  }

  [[nodiscard]] std::string table() const {
    std::ostringstream os;
    os << "family=" << to_string(family) << " norm=" << norm << "\n";
    os << "   N |   run time |  # iterations | refinements |";
    if (family == Family::Bccm) os << " k_step |";
    os << " trials | failures\n";
    char buf[256];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%4d | %9.4fs | %13.1f | %11.2f |", r.dim, r.mean_wall_ms / 1000.0,
                    r.mean_pivots, r.mean_refinements);
      os << buf;
      if (family == Family::Bccm) {
        std::snprintf(buf, sizeof buf, " %6.0f |", r.mean_k_step);
        os << buf;
      }
      std::snprintf(buf, sizeof buf, " %6d | %8d\n", r.trials, r.failures);
      os << buf;
    }
    return os.str();
  }

  [[nodiscard]] std::string csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "dim,trial,seed,converged,pivots,refinements,k_step,wall_ms,min_margin,min_certificate,error\n";
    for (const auto& t : trials) {
      os << t.dim << ',' << t.trial << ',' << t.seed << ',' << (t.converged ? 1 : 0) << ',' << t.pivots << ','
         << t.refinements << ',' << t.k_step << ',' << t.wall_ms << ',' << t.min_margin << ','
         << t.min_certificate << ',' << '"' << t.error << '"' << '\n';
    }
    return os.str();
  }
};

struct SuiteOptions {
  Family family = Family::Qms;
  std::vector<int> dims;
  int trials = 1;
  double norm = 10.0;
  std::uint64_t seed = 1;
  int jobs = 1;
  double orbit_tol = 1e-9;
};

[[nodiscard]] inline TrialRecord run_trial(const SuiteOptions& opt, int dim, int trial) {
  TrialRecord rec;
  rec.dim = dim;
  rec.trial = trial;
  rec.seed = derive_seed(opt.seed, static_cast<std::uint64_t>(dim), static_cast<std::uint64_t>(trial));
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (opt.family == Family::Qms) {
      const QmsInstance inst = draw_qms(dim, rec.seed);
      const PerronEstimate pe = perron(inst.P);
      rec.perron_ok = pe.rho < 1.0 && strictly_below(inst.P * pe.vector, pe.vector);
      const MonotoneOperator op = qms_operator(inst.P);
      const DecayResult r = sfp_run(op, default_config(opt.norm, dim));
      rec.pivots = r.pivots;
      rec.refinements = r.refinements;
      rec.min_margin = r.margins().minCoeff();
      rec.min_certificate = qms_certificate(inst.P, r.w).minCoeff();
      rec.converged = rec.min_margin > 0.0 && rec.min_certificate > 0.0;
      if (!rec.converged) rec.error = "certificate did not transfer";
    } else {
      const auto [theta, zeta] = bccm_family_parameters(dim);
      const MonotoneOperator op = bccm_operator(bccm_family(dim, theta, zeta));
      const DecayResult r = sfp_run(op, default_config(opt.norm, dim));
      rec.pivots = r.pivots;
      rec.refinements = r.refinements;
      rec.min_margin = r.margins().minCoeff();
      const OmegaPath path = iterate_decay(op, r.w, opt.orbit_tol);
      rec.k_step = static_cast<long>(path.k_step());
      rec.converged = rec.min_margin > 0.0;
    }
  } catch (const std::exception& e) {
    rec.converged = false;
    rec.error = e.what();
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

[[nodiscard]] inline SuiteReport run_suite(const SuiteOptions& opt) {
  if (opt.trials <= 0) throw Error(ErrorKind::InvalidParameter, "trials must be positive");
  if (opt.dims.empty()) throw Error(ErrorKind::InvalidParameter, "no dimensions requested");
  if (!(opt.norm > 0.0)) throw Error(ErrorKind::InvalidParameter, "norm must be positive");

  std::vector<std::pair<int, int>> work;
  for (int d : opt.dims)
    for (int t = 0; t < opt.trials; ++t) work.emplace_back(d, t);

  std::vector<TrialRecord> records(work.size());
  const int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(work.size())));
  if (jobs == 1) {
    for (std::size_t k = 0; k < work.size(); ++k) records[k] = run_trial(opt, work[k].first, work[k].second);
  } else {
    std::mutex m;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t k = 0;
          {
            std::lock_guard lock(m);
            if (next >= work.size()) return;
            k = next++;
          }
          records[k] = run_trial(opt, work[k].first, work[k].second);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  SuiteReport rep;
  rep.family = opt.family;
  rep.norm = opt.norm;
  for (int d : opt.dims) {
    SuiteRow row;
    row.dim = d;
    int ok = 0;
    for (const auto& r : records) {
      if (r.dim != d) continue;
      ++row.trials;
      if (!r.converged) {
        ++row.failures;
        continue;
      }
      ++ok;
      row.mean_wall_ms += r.wall_ms;
      row.mean_pivots += static_cast<double>(r.pivots);
      row.mean_refinements += r.refinements;
      row.mean_k_step += static_cast<double>(r.k_step);
    }
    if (ok > 0) {
      row.mean_wall_ms /= ok;
      row.mean_pivots /= ok;
      row.mean_refinements /= ok;
      row.mean_k_step /= ok;
    }
    rep.rows.push_back(row);
  }
  rep.trials = std::move(records);
  return rep;
}

}  // namespace decay
