#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "seqcoord/config.hpp"
#include "seqcoord/errors.hpp"

using namespace seqcoord;
using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path config_dir() { return std::filesystem::path(SEQCOORD_SOURCE_DIR) / "configs"; }

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

json base() { return json::parse(read_file(config_dir() / "rate_example.json")); }

}  // namespace

TEST_CASE("bundled configs parse") {
  for (const auto& entry : std::filesystem::directory_iterator(config_dir())) {
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path().string()));
  }
}

TEST_CASE("serialize, parse, serialize is a fixed point") {
  for (const auto& entry : std::filesystem::directory_iterator(config_dir())) {
    const RunConfig a = load_config(entry.path().string());
    const std::string once = to_json(a).dump();
    const RunConfig b = parse_config(once);
    CHECK(to_json(b).dump() == once);
    CHECK(config_hash(a) == config_hash(b));
  }
}

TEST_CASE("config hash ignores formatting and tracks content") {
  const json j = base();
  const RunConfig a = parse_config(j.dump());
  const RunConfig b = parse_config(j.dump(4));
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  json k = j;
  k["delta"] = 0.11;
  CHECK(config_hash(parse_config(k.dump())) != config_hash(a));
}

TEST_CASE("iid and factor forms of the same source hash alike") {
  json j = base();
  j["source"] = {{"kind", "factors"}, {"factors", json::array({json::array({json::array({0.4, 0.6})})})}};
  CHECK(config_hash(parse_config(j.dump())) == config_hash(parse_config(base().dump())));
}

TEST_CASE("missing fields are named") {
  for (const char* name : {"schema", "states", "horizon", "delta", "policy", "function_class"}) {
    json j = base();
    j.erase(name);
    CHECK(error_of(j.dump()).find(std::string("'") + name + "'") != std::string::npos);
  }
  json j = base();
  j["source"].erase("marginal");
  CHECK(error_of(j.dump()).find("'source.marginal'") != std::string::npos);
}

TEST_CASE("malformed JSON reports the line") {
  const std::string text = "{\n  \"schema\": \"seqcoord/1\",\n  \"states\": [\"a\" \"b\"]\n}\n";
  const std::string msg = error_of(text);
  CHECK(msg.find("line 3") != std::string::npos);
}

TEST_CASE("invalid values are rejected") {
  json j = base();
  j["policy"]["kernel"] = json::array({json::array({0.9, 0.2}), json::array({0.2, 0.8})});
  CHECK(error_of(j.dump()).find("policy") != std::string::npos);
  j = base();
  j["delta"] = -1.0;
  CHECK_FALSE(error_of(j.dump()).empty());
  j = base();
  j["horizon"] = 17;
  CHECK(error_of(j.dump()).find("horizon") != std::string::npos);
  j = base();
  j["experiment"] = {{"n_ladder", {4, 2}}};
  CHECK(error_of(j.dump()).find("experiment") != std::string::npos);
  j = base();
  j["schema"] = "other/1";
  CHECK(error_of(j.dump()).find("schema") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
}

TEST_CASE("function classes round-trip") {
  Eigen::MatrixXd f(2, 2);
  f << 1, -1, 0.5, 0;
  for (const FunctionClass& fc : {FunctionClass{TotalVariation{}}, FunctionClass{FiniteTable{{f}}},
                                  FunctionClass{CostLevelSets{f}}, FunctionClass{BoundedLipschitz{discrete_metric(4)}}}) {
    const json j = to_json(fc);
    CHECK(to_json(function_class_from_json(j, "fc")) == j);
  }
}

TEST_CASE("results CSV has one row per block size") {
  const RunConfig cfg = load_config((config_dir() / "simulate_small.json").string());
  const ExperimentResult r = run_experiment(cfg.experiment);
  const std::string csv = results_csv(r);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "N,trials,distortion_mean,distortion_se,entropy_norm,entropy_mode,rate_ref,entropy_cap");
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 7);
    CHECK(line.find(",exact,") != std::string::npos);
    ++rows;
  }
  CHECK(rows == 2);
  const json doc = to_json(r);
  CHECK(doc["records"].size() == 2);
}

TEST_CASE("codebook JSON uses dotted paths and action labels") {
  const TreeCodebook cb = sample_codebook(SourceLaw::iid(Distribution::uniform(2), 2),
                                          DirectedKernel::memoryless(MarkovKernel::identity(2), 2), 3, {2, 3}, 4);
  const json j = codebook_to_json(cb, Alphabet({"a", "b"}));
  CHECK(j["nodes"].size() == 2 + 6);
  CHECK(j["nodes"].contains("2.3"));
  CHECK(j["nodes"]["1"].size() == 3);
  for (const auto& [key, labels] : j["nodes"].items()) {
    for (const auto& l : labels) CHECK((l == "a" || l == "b"));
  }
  CHECK(j["error_word"] == json::array({"a", "a", "a"}));
}

TEST_CASE("write_text reports unwritable paths") {
  CHECK_THROWS_AS(write_text("/nonexistent-dir/x.txt", "hi"), IoError);
}
