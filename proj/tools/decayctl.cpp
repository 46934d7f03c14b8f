// decayctl: solve for decay points, export Omega-paths, evaluate composite
// Lyapunov values, run benchmark suites and check operators.
//
// Exit status: 0 success, 2 algorithmic non-convergence, 3 input or
// validation error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "decay/decay.hpp"

namespace fs = std::filesystem;
using decay::Error;
using decay::ErrorKind;
using decay::Vector;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNoConvergence = 2;
constexpr int kExitInput = 3;

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::RefinementExhausted:
    case ErrorKind::PivotBudgetExceeded:
    case ErrorKind::NotDecayPoint:
    case ErrorKind::NoConvergence:
      return kExitNoConvergence;
    default:
      return kExitInput;
  }
}

struct Manifest {
  std::string operator_ref;
  std::string family;
  int dim = 0;
  double norm = 1.0;
  std::uint64_t seed = 1;
  int trials = 1;
  std::string dims = "5,10,15,25";
  std::string out = ".";
  std::string format = "json";
  bool trace = false;
  int jobs = 1;
  bool provable_delta = false;
  std::optional<double> kappa_h, kappa_gamma, kappa_0, delta;
  std::string c;
  std::string result;
  std::string values;
  int grid = 100;
  double orbit_tol = decay::kOrbitTolerance;
  int samples = 2000;
};

// All file output goes through one writer so reports never interleave.
class Writer {
 public:
  explicit Writer(std::string dir) : dir_(std::move(dir)) {}

  std::string write(const std::string& name, const std::string& text) {
    fs::create_directories(dir_);
    const std::string path = (fs::path(dir_) / name).string();
    decay::io::write_text_file(path, text);
    std::cout << "wrote " << path << '\n';
    return path;
  }

 private:
  std::string dir_;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::ParseError, std::string("bad number '") + item + "' in " + what);
    }
  }
  if (out.empty()) throw Error(ErrorKind::ParseError, std::string("empty list for ") + what);
  return out;
}

decay::MonotoneOperator load_operator(const Manifest& m) {
  if (!m.operator_ref.empty()) return decay::io::resolve_operator(m.operator_ref);
  if (m.family == "bccm") {
    if (m.dim <= 0) return decay::io::resolve_operator("builtin:bccm3");
    return decay::io::resolve_operator("builtin:bccm:" + std::to_string(m.dim));
  }
  if (m.family == "qms") {
    if (m.dim <= 0) throw Error(ErrorKind::InvalidParameter, "--family qms needs --dim");
    return decay::io::resolve_operator("builtin:qms:" + std::to_string(m.dim) + ":" + std::to_string(m.seed));
  }
  throw Error(ErrorKind::InvalidParameter, "no operator given (use --operator FILE|builtin:NAME or --family)");
}

// Overrides replace defaults; c and delta follow an overridden kappa_h unless
// set themselves, and kappa_gamma defaults to kappa_h + 1.
decay::SfpConfig build_config(const Manifest& m, const decay::MonotoneOperator& op) {
  const int n = op.dim();
  decay::SfpConfig cfg = decay::default_config(m.norm, n);
  if (m.kappa_h) {
    const double ratio = *m.kappa_h / cfg.kappa_h;
    cfg.kappa_h = *m.kappa_h;
    cfg.kappa_gamma = cfg.kappa_h + 1.0;
    cfg.c *= ratio;
    cfg.delta *= ratio;
  }
  if (m.kappa_gamma) cfg.kappa_gamma = *m.kappa_gamma;
  if (m.kappa_0) cfg.kappa_0 = *m.kappa_0;
  if (!m.c.empty()) {
    const auto v = parse_list(m.c, "--c");
    if (v.size() == 1) {
      cfg.c = Vector::Constant(n, v[0]);
    } else if (static_cast<int>(v.size()) == n) {
      cfg.c = Eigen::Map<const Vector>(v.data(), n);
    } else {
      throw Error(ErrorKind::DimensionMismatch, "--c needs 1 or " + std::to_string(n) + " values");
    }
  }
  if (m.delta) cfg.delta = *m.delta;
  cfg.validate(n);
  if (m.provable_delta) cfg.delta = decay::provable_delta(op, cfg);
  return cfg;
}

std::string result_csv(const decay::DecayResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << "i,w,gamma_w,margin\n";
  const Vector mg = r.margins();
  for (Eigen::Index i = 0; i < r.w.size(); ++i) os << i << ',' << r.w[i] << ',' << r.gamma_w[i] << ',' << mg[i] << '\n';
  return os.str();
}

void print_vector(const char* label, const Vector& v) {
  std::cout << label << " = [";
  for (Eigen::Index i = 0; i < v.size(); ++i) std::cout << (i ? ", " : "") << v[i];
  std::cout << "]\n";
}

decay::DecayResult solve(const Manifest& m, const decay::MonotoneOperator& op, const decay::SfpConfig& cfg,
                         Writer& writer) {
  std::ostringstream trace;
  decay::SfpOptions opt;
  if (m.trace) opt.trace = &trace;
  const decay::DecayResult r = decay::sfp_run(op, cfg, opt);
  if (m.trace) writer.write("trace.jsonl", trace.str());
  return r;
}

// w from --result, or an inline solve.
Vector decay_point(const Manifest& m, const decay::MonotoneOperator& op, Writer& writer) {
  if (!m.result.empty()) return decay::io::decay_point_from_json(decay::io::read_json_file(m.result));
  const decay::SfpConfig cfg = build_config(m, op);
  return solve(m, op, cfg, writer).w;
}

int cmd_solve(const Manifest& m) {
  const auto op = load_operator(m);
  const auto cfg = build_config(m, op);
  Writer writer(m.out);
  const auto r = solve(m, op, cfg, writer);
  print_vector("w", r.w);
  print_vector("margins", r.margins());
  std::cout << "norm = " << r.w.norm() << "  pivots = " << r.pivots << "  refinements = " << r.refinements
            << "  final delta = " << r.final_delta << '\n';
  if (m.format == "csv") {
    writer.write("result.csv", result_csv(r));
  } else {
    writer.write("result.json", decay::io::result_to_json(r, cfg).dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_path(const Manifest& m) {
  if (m.grid <= 0) throw Error(ErrorKind::InvalidParameter, "--grid must be positive");
  const auto op = load_operator(m);
  Writer writer(m.out);
  const Vector w = decay_point(m, op, writer);
  const auto path = decay::iterate_decay(op, w, m.orbit_tol);
  const auto grid = decay::io::uniform_grid(m.grid);
  const auto bad = decay::straight_line_violations(op, w, decay::diagnostic_grid());
  std::cout << "k_step = " << path.k_step() << "  |Gamma^k(w)| = " << path.points().back().norm() << '\n';
  std::cout << "straight line 0 -> w: " << bad.size() << " violating t";
  if (!bad.empty()) std::cout << " (smallest " << bad.front() << ", largest " << bad.back() << ")";
  std::cout << '\n';
  if (m.format == "csv") {
    writer.write("path.csv", decay::io::path_table_csv(path, grid));
    writer.write("orbit.csv", decay::io::orbit_csv(path));
    std::ostringstream os;
    os.precision(17);
    os << "t\n";
    for (double t : bad) os << t << '\n';
    writer.write("line_violations.csv", os.str());
  } else {
    writer.write("path.json", decay::io::path_to_json(path, grid, bad).dump(1) + "\n");
  }
  return kExitOk;
}

int cmd_lyap(const Manifest& m) {
  const auto op = load_operator(m);
  Writer writer(m.out);
  const Vector w = decay_point(m, op, writer);
  const auto path = decay::iterate_decay(op, w, m.orbit_tol);
  const auto vals = parse_list(m.values, "--values");
  if (static_cast<int>(vals.size()) != op.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "--values needs one entry per subsystem");
  }
  const Vector v = Eigen::Map<const Vector>(vals.data(), op.dim());
  json j;
  j["values"] = vals;
  std::vector<double> inv;
  for (int i = 0; i < op.dim(); ++i) inv.push_back(path.sigma_inverse(i, v[i]));
  j["sigma_inverse"] = inv;
  j["lyapunov_value"] = path.lyapunov_value(v);
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_bench(const Manifest& m) {
  decay::SuiteOptions opt;
  if (m.family == "qms") {
    opt.family = decay::Family::Qms;
  } else if (m.family == "bccm") {
    opt.family = decay::Family::Bccm;
  } else {
    throw Error(ErrorKind::InvalidParameter, "--family must be qms or bccm");
  }
  for (double d : parse_list(m.dims, "--dims")) {
    if (d < 1 || d != static_cast<int>(d)) throw Error(ErrorKind::InvalidParameter, "--dims must be positive integers");
    opt.dims.push_back(static_cast<int>(d));
  }
  opt.trials = m.trials;
  opt.norm = m.norm;
  opt.seed = m.seed;
  opt.jobs = m.jobs;
  opt.orbit_tol = m.orbit_tol;
  const auto rep = decay::run_suite(opt);
  std::cout << rep.table();
  Writer writer(m.out);
  if (m.format == "csv") {
    writer.write("bench.csv", rep.csv());
  } else {
    json j;
    j["schema"] = "decay.bench/1";
    j["family"] = std::string(decay::to_string(rep.family));
    j["norm"] = rep.norm;
    j["seed"] = m.seed;
    for (const auto& r : rep.rows) {
      j["rows"].push_back({{"dim", r.dim},
                           {"trials", r.trials},
                           {"failures", r.failures},
                           {"mean_wall_ms", r.mean_wall_ms},
                           {"mean_pivots", r.mean_pivots},
                           {"mean_refinements", r.mean_refinements},
                           {"mean_k_step", r.mean_k_step}});
    }
    for (const auto& t : rep.trials) {
      j["trials"].push_back({{"dim", t.dim},
                             {"trial", t.trial},
                             {"seed", t.seed},
                             {"converged", t.converged},
                             {"pivots", t.pivots},
                             {"refinements", t.refinements},
                             {"k_step", t.k_step},
                             {"min_margin", t.min_margin},
                             {"min_certificate", t.min_certificate},
                             {"error", t.error}});
    }
    writer.write("bench.json", j.dump(2) + "\n");
  }
  for (const auto& t : rep.trials)
    if (!t.converged) std::cerr << "N=" << t.dim << " trial " << t.trial << ": " << t.error << '\n';
  return rep.failures() == 0 ? kExitOk : kExitNoConvergence;
}

int cmd_check(const Manifest& m) {
  const auto op = load_operator(m);
  const auto blocks = decay::strongly_connected_components(op.gamma().adjacency_lists());
  std::cout << "irreducible: " << (blocks.size() == 1 ? "yes" : "no");
  if (blocks.size() != 1) std::cout << " (blocks " << decay::format_blocks(blocks) << ")";
  std::cout << '\n';

  decay::SfpConfig cfg = build_config(m, op);
  const double radius = cfg.kappa_gamma + cfg.kappa_0 + cfg.delta;
  const auto pts = decay::orthant_samples(op.dim(), radius, m.samples, m.seed);
  if (const auto s = decay::check_small_gain_sampled(op, pts)) {
    std::cout << "sampled small gain: violated, witness s with s <= Gamma(s):\n";
    print_vector("  s", *s);
    print_vector("  Gamma(s)", op(*s));
  } else {
    std::cout << "sampled small gain: ok (" << pts.size() << " samples, radius " << radius << ")\n";
  }
  std::cout << "provable delta: " << decay::provable_delta(op, cfg) << " (k = " << decay::provable_k(op, cfg)
            << ")\n";
  return kExitOk;
}

void add_operator_flags(CLI::App* sub, Manifest& m) {
  sub->add_option("--operator", m.operator_ref, "operator file or builtin:bccm3|bccm3-printed|bccm:N|qms:N:SEED");
  sub->add_option("--family", m.family, "builtin family (bccm or qms) when no --operator is given");
  sub->add_option("--dim", m.dim, "dimension for --family");
  sub->add_option("--seed", m.seed, "seed for random families");
}

void add_config_flags(CLI::App* sub, Manifest& m) {
  sub->add_option("--norm", m.norm, "target norm of the decay point")->required();
  sub->add_option("--kappa-h", m.kappa_h, "kappa_h override");
  sub->add_option("--kappa-gamma", m.kappa_gamma, "kappa_Gamma override");
  sub->add_option("--kappa-0", m.kappa_0, "kappa_0 override");
  sub->add_option("--delta", m.delta, "initial mesh override");
  sub->add_option("--c", m.c, "start point override (one value or a comma list)");
  sub->add_flag("--provable-delta", m.provable_delta, "use the provable initial mesh");
  sub->add_flag("--trace", m.trace, "write a per-pivot trace (trace.jsonl)");
}

void add_output_flags(CLI::App* sub, Manifest& m) {
  sub->add_option("--out", m.out, "output directory");
  sub->add_option("--format", m.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decay point solver and Omega-path tools"};
  app.require_subcommand(1);
  Manifest m;

  auto* solve_cmd = app.add_subcommand("solve", "compute a certified decay point");
  add_operator_flags(solve_cmd, m);
  add_config_flags(solve_cmd, m);
  add_output_flags(solve_cmd, m);

  auto* path_cmd = app.add_subcommand("path", "orbit, sigma table and straight-line diagnostic");
  add_operator_flags(path_cmd, m);
  add_config_flags(path_cmd, m);
  add_output_flags(path_cmd, m);
  path_cmd->add_option("--result", m.result, "result file supplying w (otherwise solve inline)");
  path_cmd->add_option("--grid", m.grid, "number of r intervals in the sigma table");
  path_cmd->add_option("--orbit-tol", m.orbit_tol, "orbit stops once |Gamma^k(w)| falls below this");
  // --norm is only needed for the inline solve.
  path_cmd->get_option("--norm")->required(false);

  auto* lyap_cmd = app.add_subcommand("lyap", "composite Lyapunov value max_i sigma_i^-1(V_i)");
  add_operator_flags(lyap_cmd, m);
  add_config_flags(lyap_cmd, m);
  lyap_cmd->add_option("--result", m.result, "result file supplying w (otherwise solve inline)");
  lyap_cmd->add_option("--values", m.values, "subsystem values V_1,...,V_N")->required();
  lyap_cmd->add_option("--orbit-tol", m.orbit_tol, "orbit tolerance");
  lyap_cmd->get_option("--norm")->required(false);

  auto* bench_cmd = app.add_subcommand("bench", "benchmark suite table");
  bench_cmd->add_option("--family", m.family, "qms or bccm")->required();
  bench_cmd->add_option("--dims", m.dims, "comma-separated dimensions");
  bench_cmd->add_option("--trials", m.trials, "trials per dimension");
  bench_cmd->add_option("--norm", m.norm, "target norm");
  bench_cmd->add_option("--seed", m.seed, "suite seed");
  bench_cmd->add_option("--jobs", m.jobs, "worker threads");
  add_output_flags(bench_cmd, m);

  auto* check_cmd = app.add_subcommand("check", "irreducibility, sampled small gain, provable delta");
  add_operator_flags(check_cmd, m);
  add_config_flags(check_cmd, m);
  check_cmd->add_option("--samples", m.samples, "random samples for the small-gain check");
  check_cmd->get_option("--norm")->required(false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*solve_cmd) return cmd_solve(m);
    if (*path_cmd) return cmd_path(m);
    if (*lyap_cmd) return cmd_lyap(m);
    if (*bench_cmd) return cmd_bench(m);
    if (*check_cmd) return cmd_check(m);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (e.kind() == ErrorKind::RefinementExhausted) std::cerr << "hint: retry with a smaller --norm\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
