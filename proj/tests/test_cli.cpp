#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "riskmdp/cli.hpp"
#include "riskmdp/io.hpp"

using namespace riskmdp;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args, const std::string& input = {}) {
  std::istringstream in(input);
  std::ostringstream out, err;
  int code = run_cli(args, in, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("riskmdp-cli-" + std::to_string(std::rand()) + "-" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& content = {}) const {
    auto p = (path / name).string();
    if (!content.empty()) std::ofstream(p) << content;
    return p;
  }
};

std::string read(const std::string& path) {
  std::ifstream f(path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

const char* kMix075 = R"({
  "memory": ["m"],
  "initial_memory": {"m": "1"},
  "next_move": [
    {"state": "s0", "memory": "m", "actions": {"a": "3/4", "b": "1/4"}},
    {"state": "s1", "memory": "m", "actions": {"l1": 1}},
    {"state": "s2", "memory": "m", "actions": {"l2": 1}},
    {"state": "s3", "memory": "m", "actions": {"l3": 1}}
  ]
})";

}  // namespace

TEST_CASE("check the choice example") {
  TempDir dir;
  auto model = dir.file("choice.json");
  REQUIRE(run({"generate", "choice", "-o", model}).code == 0);
  auto r = run({"check", model});
  CHECK(r.code == kExitSat);
  CHECK(r.out.rfind("SAT\n", 0) == 0);

  auto verdict = dir.file("verdict.json");
  CHECK(run({"check", model, "--out", verdict}).code == kExitSat);
  auto j = Json::parse(read(verdict));
  CHECK(j.at("status") == "SAT");
  auto mdp = example_from_json(Json::parse(read(model))).mdp;
  auto witness = strategy_from_json(j.at("witness"), mdp);
  CHECK(validate(mdp, witness).ok());
  CHECK(j.contains("certificate"));

  auto js = run({"check", model, "--json"});
  CHECK(js.out.find("\"witness\"") != std::string::npos);
}

TEST_CASE("check with a separate query file and an unsatisfiable bound") {
  TempDir dir;
  auto model = dir.file("choice.json");
  run({"generate", "choice", "-o", model});
  auto bare = dir.file("bare.json", dump(Json::parse(read(model)).at("model")));
  auto query = dir.file("q.json", R"({"objective": "reach", "constraints": [{"dim": 0, "e": "13/2", "cvar": {"p": "1/20", "c": 2}}]})");
  auto r = run({"check", bare, query});
  CHECK(r.code == kExitUnsat);
  CHECK(r.out.rfind("UNSAT\n", 0) == 0);
  CHECK(run({"check", bare}).code == kExitInvalid);
}

TEST_CASE("evaluate a strategy") {
  TempDir dir;
  auto model = dir.file("choice.json");
  run({"generate", "choice", "-o", model});
  auto strategy = dir.file("mix075.json", kMix075);
  auto r = run({"evaluate", model, strategy, "--p", "1/20", "--q", "1/20"});
  CHECK(r.code == 0);
  CHECK(r.out.find("E=6 VaR@1/20=5 CVaR@1/20=5/2") != std::string::npos);

  auto csv = dir.file("samples.csv");
  auto s = run({"simulate", model, strategy, "--p", "1/20", "--runs", "2000", "--seed", "3", "--csv", csv});
  CHECK(s.code == 0);
  CHECK(s.out.find("simulated: E=") != std::string::npos);
  CHECK(read(csv).rfind("run,dim0\n", 0) == 0);
}

TEST_CASE("gadget pipeline through stdin") {
  TempDir dir;
  auto cnf = dir.file("unsat.cnf", "p cnf 1 2\n1 0\n-1 0\n");
  auto g = run({"gadget-sat", cnf});
  REQUIRE(g.code == 0);
  auto r = run({"check", "-"}, g.out);
  CHECK(r.code == kExitUnsat);
  CHECK(r.out.rfind("UNSAT\n", 0) == 0);

  auto sat = run({"gadget-sat", "-"}, "p cnf 2 2\n1 2 0\n-1 2 0\n");
  CHECK(run({"check", "-"}, sat.out).code == kExitSat);
}

TEST_CASE("mec listing") {
  TempDir dir;
  auto model = dir.file("loop.json");
  run({"generate", "loop", "-o", model});
  auto r = run({"mec", model});
  CHECK(r.code == 0);
  CHECK(r.out.find("MEC 0: states") != std::string::npos);
  CHECK(r.out.find("actions a") != std::string::npos);
}

TEST_CASE("generated files round-trip byte for byte") {
  for (const char* kind : {"choice", "loop", "slow", "negative"}) {
    auto text = run({"generate", kind}).out;
    CHECK(dump(to_json(example_from_json(Json::parse(text)))) == text);
  }
  auto random = run({"generate", "random", "--states", "6", "--dims", "2", "--seed", "4"}).out;
  auto j = Json::parse(random);
  CHECK(dump(Json{{"model", to_json(mdp_from_json(j.at("model")))}}) == random);
  CHECK(run({"generate", "random", "--states", "6", "--seed", "4"}).out ==
        run({"generate", "random", "--states", "6", "--seed", "4"}).out);
}

TEST_CASE("usage and input errors") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"check"}).code == kExitUsage);
  CHECK(run({"check", "x.json", "--threads", "0"}).code == kExitUsage);
  CHECK(run({"--help"}).code == 0);

  TempDir dir;
  CHECK(run({"check", dir.file("broken.json", "{not json")}).code == kExitInvalid);
  CHECK(run({"check", dir.file("missing.json")}).code == kExitInvalid);
  CHECK(run({"generate", "nope"}).code == kExitInvalid);

  auto bundle = Json::parse(run({"generate", "choice"}).out);
  bundle["model"]["actions"][1]["transitions"]["s2"] = "8/10";
  auto bad_row = run({"check", dir.file("row.json", dump(bundle))});
  CHECK(bad_row.code == kExitInvalid);
  CHECK(bad_row.err.find("'b'") != std::string::npos);

  auto floaty = Json::parse(run({"generate", "choice"}).out);
  floaty["model"]["actions"][1]["transitions"]["s2"] = 0.9;
  CHECK(run({"check", dir.file("float.json", dump(floaty))}).code == kExitInvalid);

  auto bad_level = Json::parse(run({"generate", "choice"}).out);
  bad_level["query"]["constraints"][0]["cvar"]["p"] = "1";
  CHECK(run({"check", dir.file("level.json", dump(bad_level))}).code == kExitInvalid);
}

TEST_CASE("installed binary reports exit codes") {
  const char* exe = std::getenv("RISKMDP_CLI");
  if (exe == nullptr) {
    MESSAGE("RISKMDP_CLI not set; skipping the process-level check");
    return;
  }
  TempDir dir;
  auto model = dir.file("choice.json");
  auto quiet = " > " + dir.file("log.txt") + " 2>&1";
  auto status = [](int raw) { return WEXITSTATUS(raw); };
  CHECK(status(std::system((std::string(exe) + " generate choice -o " + model + quiet).c_str())) == 0);
  CHECK(status(std::system((std::string(exe) + " check " + model + quiet).c_str())) == 0);
  CHECK(status(std::system((std::string(exe) + " check" + quiet).c_str())) == 64);
  CHECK(status(std::system((std::string(exe) + " check " + dir.file("none.json") + quiet).c_str())) == 65);
}
