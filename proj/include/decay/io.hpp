#pragma once

// Structured-text (JSON) schemas for operator descriptions, solver results
// and Omega-path exports, plus CSV tables.
//
// Operator description, schema "decay.operator/1":
//   { "schema": "decay.operator/1", "dimension": 3,
//     "aggregation": "sum" | ["sum", "max", ...],
//     "gains": [ {"row": 0, "col": 2, "family": "log_exp", "coef": 0.8},
//                {"row": 2, "col": 0, "family": "power", "coef": 5e-4, "exponent": 2},
//                {"row": 0, "col": 0, "family": "linear", "coef": 0.001} ] }
// Rows and columns are 0-based; omitted entries are zero gains.

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "decay/benchmarks.hpp"
#include "decay/error.hpp"
#include "decay/gain_ops.hpp"
#include "decay/omega_path.hpp"
#include "decay/sfp_solver.hpp"

namespace decay::io {

using nlohmann::json;

inline constexpr const char* kOperatorSchema = "decay.operator/1";
inline constexpr const char* kResultSchema = "decay.result/1";
inline constexpr const char* kPathSchema = "decay.path/1";

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& m) { throw Error(ErrorKind::ParseError, m); }

inline void expect_schema(const json& j, const char* schema) {
  if (!j.is_object()) parse_fail("document is not an object");
  if (!j.contains("schema") || j.at("schema") != schema) {
    parse_fail(std::string("missing or unsupported schema tag (expected ") + schema + ")");
  }
}

inline std::string aggregation_name(const Aggregation& a) {
  switch (a.kind()) {
    case Aggregation::Kind::Sum: return "sum";
    case Aggregation::Kind::Max: return "max";
    case Aggregation::Kind::Custom: break;
  }
  throw Error(ErrorKind::NotSerializable, "custom aggregation has no structured-text form");
}

inline Aggregation aggregation_from_name(const std::string& s) {
  if (s == "sum") return Aggregation::sum();
  if (s == "max") return Aggregation::max();
  parse_fail("unknown aggregation '" + s + "'");
}

inline json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vector vector_from_json(const json& a, const char* what) {
  if (!a.is_array()) parse_fail(std::string(what) + " must be an array");
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) parse_fail(std::string(what) + " must contain numbers");
    v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  }
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Gains and operators
// ---------------------------------------------------------------------------

[[nodiscard]] inline json gain_to_json(const GainSpec& g) {
  switch (g.kind()) {
    case GainSpec::Kind::Zero: return {{"family", "zero"}};
    case GainSpec::Kind::Linear: return {{"family", "linear"}, {"coef", g.coef()}};
    case GainSpec::Kind::Power: return {{"family", "power"}, {"coef", g.coef()}, {"exponent", g.exponent()}};
    case GainSpec::Kind::LogExp: return {{"family", "log_exp"}, {"coef", g.coef()}};
    case GainSpec::Kind::Custom: break;
  }
  throw Error(ErrorKind::NotSerializable, "custom gain has no structured-text form");
}

[[nodiscard]] inline GainSpec gain_from_json(const json& j) {
  try {
    const std::string fam = j.at("family").get<std::string>();
    if (fam == "zero") return GainSpec::zero();
    if (fam == "linear") return GainSpec::linear(j.at("coef").get<double>());
    if (fam == "power") return GainSpec::power(j.at("coef").get<double>(), j.at("exponent").get<double>());
    if (fam == "log_exp") return GainSpec::log_exp(j.at("coef").get<double>());
    detail::parse_fail("unknown gain family '" + fam + "'");
  } catch (const json::exception& e) {
    detail::parse_fail(std::string("malformed gain entry: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ParseError) throw;
    detail::parse_fail(e.what());
  }
}

[[nodiscard]] inline json operator_to_json(const MonotoneOperator& op) {
  json j;
  j["schema"] = kOperatorSchema;
  j["dimension"] = op.dim();
  const auto& mu = op.aggregations();
  bool uniform = true;
  for (const auto& a : mu) uniform = uniform && a.kind() == mu.front().kind();
  if (uniform) {
    j["aggregation"] = detail::aggregation_name(mu.front());
  } else {
    json arr = json::array();
    for (const auto& a : mu) arr.push_back(detail::aggregation_name(a));
    j["aggregation"] = arr;
  }
  json gains = json::array();
  for (int i = 0; i < op.dim(); ++i)
    for (int j2 = 0; j2 < op.dim(); ++j2) {
      const GainSpec& g = op.gamma().at(i, j2);
      if (g.is_zero()) continue;
      json e = gain_to_json(g);
      e["row"] = i;
      e["col"] = j2;
      gains.push_back(e);
    }
  j["gains"] = gains;
  return j;
}

[[nodiscard]] inline MonotoneOperator operator_from_json(const json& j) {
  detail::expect_schema(j, kOperatorSchema);
  try {
    const int n = j.at("dimension").get<int>();
    if (n <= 0) detail::parse_fail("dimension must be positive");
    GainMatrix g(n);
    for (const json& e : j.at("gains")) {
      const int r = e.at("row").get<int>();
      const int c = e.at("col").get<int>();
      if (r < 0 || c < 0 || r >= n || c >= n) detail::parse_fail("gain index outside the dimension");
      if (!g.at(r, c).is_zero()) detail::parse_fail("duplicate gain entry");
      g.set(r, c, gain_from_json(e));
    }
    std::vector<Aggregation> mu;
    const json& agg = j.at("aggregation");
    if (agg.is_string()) {
      mu.assign(static_cast<std::size_t>(n), detail::aggregation_from_name(agg.get<std::string>()));
    } else if (agg.is_array() && static_cast<int>(agg.size()) == n) {
      for (const json& a : agg) mu.push_back(detail::aggregation_from_name(a.get<std::string>()));
    } else {
      detail::parse_fail("aggregation must be a name or one name per row");
    }
    return MonotoneOperator(std::move(g), std::move(mu));
  } catch (const json::exception& e) {
    detail::parse_fail(std::string("malformed operator description: ") + e.what());
  }
}

[[nodiscard]] inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) detail::parse_fail("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    detail::parse_fail("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::ParseError, "cannot write '" + path + "'");
  out << text;
}

/// `builtin:bccm3` (perturbed 3-state circuit), `builtin:bccm3-printed`
/// (same with the 0.005 coefficient on (3,1)), `builtin:bccm:<N>` (scaled
/// family), `builtin:qms:<N>:<seed>`; anything else is a file path.
[[nodiscard]] inline MonotoneOperator resolve_operator(const std::string& what) {
  const std::string prefix = "builtin:";
  if (what.rfind(prefix, 0) != 0) return operator_from_json(read_json_file(what));
  const std::string name = what.substr(prefix.size());
  try {
    if (name == "bccm3") return bccm_operator(perturbed_bccm3());
    if (name == "bccm3-printed") return bccm_operator(perturbed_bccm3(5e-3));
    if (name.rfind("bccm:", 0) == 0) {
      const int n = std::stoi(name.substr(5));
      const auto [theta, zeta] = bccm_family_parameters(n);
      return bccm_operator(bccm_family(n, theta, zeta));
    }
    if (name.rfind("qms:", 0) == 0) {
      const std::string rest = name.substr(4);
      const auto colon = rest.find(':');
      const int n = std::stoi(rest.substr(0, colon));
      const std::uint64_t seed = colon == std::string::npos ? 1 : std::stoull(rest.substr(colon + 1));
      return gen_qms(n, seed);
    }
  } catch (const std::invalid_argument&) {
    detail::parse_fail("malformed builtin selector '" + what + "'");
  } catch (const std::out_of_range&) {
    detail::parse_fail("malformed builtin selector '" + what + "'");
  }
  detail::parse_fail("unknown builtin operator '" + what + "'");
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

[[nodiscard]] inline json config_to_json(const SfpConfig& cfg) {
  return {{"norm", cfg.norm},
          {"kappa_h", cfg.kappa_h},
          {"kappa_gamma", cfg.kappa_gamma},
          {"kappa_0", cfg.kappa_0},
          {"c", detail::vector_json(cfg.c)},
          {"delta", cfg.delta},
          {"refine_factor", cfg.refine_factor},
          {"max_pivots_per_level", cfg.max_pivots_per_level},
          {"max_refinements", cfg.max_refinements},
          {"dom_margin", cfg.dom_margin}};
}

[[nodiscard]] inline json result_to_json(const DecayResult& r, const SfpConfig& cfg) {
  json j;
  j["schema"] = kResultSchema;
  j["dimension"] = r.w.size();
  j["w"] = detail::vector_json(r.w);
  j["gamma_w"] = detail::vector_json(r.gamma_w);
  j["margins"] = detail::vector_json(r.margins());
  j["norm_w"] = r.w.norm();
  j["pivots"] = r.pivots;
  j["level_pivots"] = r.level_pivots;
  j["refinements"] = r.refinements;
  j["final_delta"] = r.final_delta;
  j["wall_time_s"] = r.wall_time.count();
  j["config"] = config_to_json(cfg);
  return j;
}

/// Reads back w from a result document (the certificate is recomputed by callers).
[[nodiscard]] inline Vector decay_point_from_json(const json& j) {
  detail::expect_schema(j, kResultSchema);
  try {
    return detail::vector_from_json(j.at("w"), "w");
  } catch (const json::exception& e) {
    detail::parse_fail(std::string("malformed result: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Omega-path export
// ---------------------------------------------------------------------------

[[nodiscard]] inline std::vector<double> uniform_grid(int intervals) {
  std::vector<double> g;
  for (int j = 0; j <= intervals; ++j) g.push_back(static_cast<double>(j) / intervals);
  return g;
}

/// r, sigma_1(r), ..., sigma_N(r)
[[nodiscard]] inline std::string path_table_csv(const OmegaPath& path, const std::vector<double>& grid) {
  std::ostringstream os;
  os.precision(17);
  os << "r";
  for (int i = 0; i < path.dim(); ++i) os << ",sigma_" << i + 1;
  os << '\n';
  for (double r : grid) {
    const Vector s = path.sigma(r);
    os << r;
    for (int i = 0; i < path.dim(); ++i) os << ',' << s[i];
    os << '\n';
  }
  return os.str();
}

/// k, Gamma^k(w)_1, ..., Gamma^k(w)_N
[[nodiscard]] inline std::string orbit_csv(const OmegaPath& path) {
  std::ostringstream os;
  os.precision(17);
  os << "k";
  for (int i = 0; i < path.dim(); ++i) os << ",x_" << i + 1;
  os << '\n';
  for (std::size_t k = 0; k < path.points().size(); ++k) {
    os << k;
    for (int i = 0; i < path.dim(); ++i) os << ',' << path.points()[k][i];
    os << '\n';
  }
  return os.str();
}

[[nodiscard]] inline json path_to_json(const OmegaPath& path, const std::vector<double>& grid,
                                       const std::vector<double>& line_violations) {
  json j;
  j["schema"] = kPathSchema;
  j["dimension"] = path.dim();
  j["w"] = detail::vector_json(path.w());
  j["tol"] = path.tol();
  j["k_step"] = path.k_step();
  json orbit = json::array();
  for (const Vector& p : path.points()) orbit.push_back(detail::vector_json(p));
  j["orbit"] = orbit;
  json table = json::array();
  for (double r : grid) table.push_back({{"r", r}, {"sigma", detail::vector_json(path.sigma(r))}});
  j["sigma"] = table;
  j["straight_line_violations"] = line_violations;
  return j;
}

}  // namespace decay::io
