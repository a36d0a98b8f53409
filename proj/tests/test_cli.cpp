#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "seqcoord/cli.hpp"

using namespace seqcoord;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "seqcoord");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string config(const char* name) { return (fs::path(SEQCOORD_SOURCE_DIR) / "configs" / name).string(); }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("seqcoord_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Value printed after a row label.
double value_after(const std::string& text, const std::string& label) {
  const auto at = text.find(label);
  REQUIRE(at != std::string::npos);
  return std::stod(text.substr(at + label.size()));
}

fs::path write_config(const std::string& name, const json& j) {
  const fs::path p = scratch(name);
  std::ofstream(p) << j.dump(2);
  return p;
}

}  // namespace

TEST_CASE("rate on a trivially large budget is zero") {
  const Run r = cli({"rate", "--config", config("trivial_large_delta.json"), "--out", scratch("trivial").string()});
  CHECK(r.code == kExitOk);
  CHECK(std::abs(value_after(r.out, "rate")) < 1e-6);
}

TEST_CASE("rate at zero budget equals the target information") {
  const fs::path out = scratch("pin");
  const Run r = cli({"rate", "--config", config("delta_zero.json"), "--out", out.string()});
  REQUIRE(r.code == kExitOk);
  CHECK(value_after(r.out, "rate") == doctest::Approx(value_after(r.out, "target_information")).epsilon(1e-6));
  const json doc = json::parse(slurp(out / "rate.json"));
  CHECK(doc["solution"]["rate"].get<double>() == doctest::Approx(value_after(r.out, "rate")).epsilon(1e-9));
  CHECK(doc["manifest"]["config_hash"].get<std::string>().size() == 16);
}

TEST_CASE("a missing field exits 2 and names the field") {
  json j = json::parse(slurp(config("rate_example.json")));
  j.erase("delta");
  const Run r = cli({"rate", "--config", write_config("missing.json", j).string(), "--out", scratch("missing").string()});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("'delta'") != std::string::npos);
}

TEST_CASE("command-line errors exit 2") {
  CHECK(cli({}).code == kExitConfig);
  CHECK(cli({"rate"}).code == kExitConfig);
  CHECK(cli({"rate", "--config", "/nonexistent.json"}).code == kExitConfig);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("simulate writes one CSV row per block size and is reproducible") {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  const Run ra = cli({"simulate", "--config", config("simulate_small.json"), "--out", a.string(), "--codebooks"});
  REQUIRE(ra.code == kExitOk);
  const Run rb = cli({"simulate", "--config", config("simulate_small.json"), "--out", b.string(), "--threads", "2"});
  REQUIRE(rb.code == kExitOk);
  std::istringstream csv(slurp(a / "results.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == 1 + 2);
  CHECK(slurp(a / "results.csv") == slurp(b / "results.csv"));
  json ja = json::parse(slurp(a / "result.json")), jb = json::parse(slurp(b / "result.json"));
  for (json* j : {&ja, &jb}) {
    (*j)["manifest"].erase("timestamps");
    (*j)["manifest"].erase("config_hash");
  }
  // The thread count is part of the config echo and its hash; everything
  // else must match.
  ja["config"]["experiment"].erase("threads");
  jb["config"]["experiment"].erase("threads");
  CHECK(ja.dump() == jb.dump());
  CHECK(fs::exists(a / "codebook_N2.json"));
  CHECK(fs::exists(a / "codebook_N4.json"));
}

TEST_CASE("the seed flag overrides the config") {
  const fs::path a = scratch("seed_a"), b = scratch("seed_b");
  REQUIRE(cli({"simulate", "--config", config("simulate_small.json"), "--out", a.string(), "--seed", "8"}).code == kExitOk);
  REQUIRE(cli({"simulate", "--config", config("simulate_small.json"), "--out", b.string()}).code == kExitOk);
  CHECK(json::parse(slurp(a / "result.json"))["manifest"]["seed"] == 8);
  CHECK(slurp(a / "results.csv") != slurp(b / "results.csv"));
}

TEST_CASE("an unwritable output directory exits 4") {
  const fs::path file = scratch("plain_file");
  std::ofstream(file) << "x";
  const Run r = cli({"simulate", "--config", config("simulate_small.json"), "--out", (file / "sub").string()});
  CHECK(r.code == kExitIo);
}

TEST_CASE("a branch count above the cap exits 3") {
  json j = json::parse(slurp(config("trend_plugin.json")));
  j["experiment"]["clamp_branches"] = false;
  j["experiment"]["reference_draws"] = 100;
  const Run r = cli({"simulate", "--config", write_config("guard.json", j).string(), "--out", scratch("guard").string()});
  CHECK(r.code == kExitGuard);
  CHECK(r.err.find("guard") != std::string::npos);
}

TEST_CASE("bounds rows") {
  const Run r = cli({"bounds", "--config", config("delta_zero.json"), "--out", scratch("bounds").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("0.69314718056") != std::string::npos);
  const double info = value_after(r.out, "(value at delta = 0)");
  CHECK(value_after(r.out, "test-channel upper bound") == doctest::Approx(info).epsilon(1e-6));
  CHECK(value_after(r.out, "minimal directed information per step") == doctest::Approx(info).epsilon(1e-6));

  const Run t2 = cli({"bounds", "--config", config("simulate_small.json"), "--out", scratch("bounds2").string()});
  REQUIRE(t2.code == kExitOk);
  CHECK(t2.out.find("n/a (T>1)") != std::string::npos);

  const Run bl = cli({"bounds", "--config", config("bounds_lipschitz.json"), "--out", scratch("bounds3").string()});
  REQUIRE(bl.code == kExitOk);
  CHECK(value_after(bl.out, "test-channel upper bound") >= value_after(bl.out, "minimal directed information per step") - 1e-6);
}

TEST_CASE("selftest runs a single criterion") {
  const Run r = cli({"selftest", "--only", "awgn_closed_form"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.rfind("PASS awgn_closed_form", 0) == 0);
}
