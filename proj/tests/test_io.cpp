#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "decay/decay.hpp"

using namespace decay;
using nlohmann::json;

namespace {

std::string data(const char* name) { return std::string(DECAY_DATA_DIR) + "/" + name; }

ErrorKind parse_kind(const json& j) {
  try {
    (void)io::operator_from_json(j);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "accepted " << j.dump();
  return ErrorKind::InvalidParameter;
}

json minimal() {
  return json::parse(R"({"schema": "decay.operator/1", "dimension": 2, "aggregation": "sum",
                         "gains": [{"row": 0, "col": 1, "family": "linear", "coef": 0.5},
                                   {"row": 1, "col": 0, "family": "linear", "coef": 0.5}]})");
}

}  // namespace

TEST(OperatorJson, RoundTripIsLossless) {
  for (const MonotoneOperator& op :
       {bccm_operator(perturbed_bccm3()), io::operator_from_json(io::read_json_file(data("linear_ring3.json"))),
        bccm_operator(bccm_family(10, 0.75, 1.02))}) {
    const json j = io::operator_to_json(op);
    const MonotoneOperator back = io::operator_from_json(json::parse(j.dump()));
    EXPECT_EQ(io::operator_to_json(back), j);
    for (int i = 0; i < op.dim(); ++i)
      for (int k = 0; k < op.dim(); ++k) EXPECT_TRUE(op.gamma().at(i, k) == back.gamma().at(i, k));
    const Vector s = Vector::LinSpaced(op.dim(), 0.5, 9.0);
    EXPECT_EQ(op(s), back(s));
  }
}

TEST(OperatorJson, FixtureMatchesBuiltin) {
  const MonotoneOperator file = io::resolve_operator(data("bccm3_perturbed.json"));
  EXPECT_EQ(io::operator_to_json(file), io::operator_to_json(io::resolve_operator("builtin:bccm3")));
}

TEST(OperatorJson, MixedAggregationsSurvive) {
  const json j = io::operator_to_json(io::resolve_operator(data("linear_ring3.json")));
  EXPECT_EQ(j.at("aggregation"), json({"sum", "max", "sum"}));
}

TEST(OperatorJson, CustomEntriesAreNotSerializable) {
  const MonotoneOperator q = gen_qms(3, 1);
  try {
    (void)io::operator_to_json(q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotSerializable);
  }
}

TEST(OperatorJson, ParseErrors) {
  EXPECT_NO_THROW((void)io::operator_from_json(minimal()));
  json j = minimal();
  j["schema"] = "decay.operator/0";
  EXPECT_EQ(parse_kind(j), ErrorKind::ParseError);
  j = minimal();
  j.erase("schema");
  EXPECT_EQ(parse_kind(j), ErrorKind::ParseError);
  j = minimal();
  j["gains"][0]["family"] = "cubic";
  EXPECT_EQ(parse_kind(j), ErrorKind::ParseError);
  j = minimal();
  j["gains"][0]["col"] = 2;
  EXPECT_EQ(parse_kind(j), ErrorKind::ParseError);
  j = minimal();
  j["gains"].push_back(j["gains"][0]);
  EXPECT_EQ(parse_kind(j), ErrorKind::ParseError);
  j = minimal();
  j["aggregation"] = json({"sum"});
  EXPECT_EQ(parse_kind(j), ErrorKind::ParseError);
  j = minimal();
  j["aggregation"] = "product";
  EXPECT_EQ(parse_kind(j), ErrorKind::ParseError);
  j = minimal();
  j["gains"][0]["coef"] = -1.0;
  EXPECT_EQ(parse_kind(j), ErrorKind::ParseError);
  j = minimal();
  j["gains"][0].erase("coef");
  EXPECT_EQ(parse_kind(j), ErrorKind::ParseError);
  j = minimal();
  j["dimension"] = 0;
  EXPECT_EQ(parse_kind(j), ErrorKind::ParseError);
  EXPECT_EQ(parse_kind(json::array()), ErrorKind::ParseError);
}

TEST(OperatorJson, FilesAndSelectors) {
  EXPECT_THROW((void)io::read_json_file(data("missing.json")), Error);
  const auto tmp = std::filesystem::temp_directory_path() / "decay_bad.json";
  io::write_text_file(tmp.string(), "{not json");
  EXPECT_THROW((void)io::read_json_file(tmp.string()), Error);
  std::filesystem::remove(tmp);

  EXPECT_EQ(io::resolve_operator("builtin:bccm:10").dim(), 10);
  EXPECT_EQ(io::resolve_operator("builtin:qms:4:9").dim(), 4);
  EXPECT_EQ(io::resolve_operator("builtin:bccm3-printed").gamma().at(2, 0).coef(), 5e-3);
  EXPECT_THROW((void)io::resolve_operator("builtin:nothing"), Error);
  EXPECT_THROW((void)io::resolve_operator("builtin:bccm:x"), Error);
  EXPECT_FALSE(is_irreducible(io::resolve_operator(data("reducible.json")).gamma()));
}

TEST(ResultJson, ReCertificationReproducesMargins) {
  const MonotoneOperator op = io::resolve_operator("builtin:bccm3");
  const SfpConfig cfg = default_config(12.0, 3);
  const DecayResult r = sfp_run(op, cfg);
  const json j = io::result_to_json(r, cfg);
  EXPECT_EQ(j.at("schema"), io::kResultSchema);
  EXPECT_EQ(j.at("pivots").get<std::size_t>(), r.pivots);
  const Vector w = io::decay_point_from_json(json::parse(j.dump(2)));
  EXPECT_EQ(w, r.w);
  EXPECT_EQ(w - op(w), r.margins());
  json bad = j;
  bad["schema"] = "decay.operator/1";
  EXPECT_THROW((void)io::decay_point_from_json(bad), Error);
}

TEST(PathExport, TableEndpointsAndOrbit) {
  GainMatrix g(2);
  g.set(0, 1, GainSpec::linear(0.5));
  g.set(1, 0, GainSpec::linear(0.5));
  const MonotoneOperator op(g, Aggregation::sum());
  const OmegaPath p = iterate_decay(op, Vector::Ones(2));
  const std::string csv = io::path_table_csv(p, io::uniform_grid(4));
  std::istringstream in(csv);
  std::string header, first, line, last;
  std::getline(in, header);
  std::getline(in, first);
  while (std::getline(in, line)) last = line;
  EXPECT_EQ(header, "r,sigma_1,sigma_2");
  EXPECT_EQ(first, "0,0,0");
  EXPECT_EQ(last, "1,1,1");
  EXPECT_EQ(csv.find("0.5,0.5,0.5"), csv.find("\n0.5,") + 1);

  const json j = io::path_to_json(p, io::uniform_grid(10), {});
  EXPECT_EQ(j.at("k_step"), 31);
  EXPECT_EQ(j.at("orbit").size(), 32u);
  EXPECT_EQ(j.at("sigma").size(), 11u);
  const std::string orbit = io::orbit_csv(p);
  EXPECT_EQ(orbit.substr(0, orbit.find('\n')), "k,x_1,x_2");
}
