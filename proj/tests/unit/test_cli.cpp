#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(BIPMIXED_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("simulate, fit, predict and evaluate from the command line") {
  const fs::path dir = fs::temp_directory_path() / "bipmixed_cli_test";
  fs::remove_all(dir);
  const std::string d = dir.string();
  REQUIRE(run("simulate --scenario 2 --seed 4 --p 40 --signal 20 --out " + d) == 0);
  CHECK(fs::exists(dir / "train.json"));
  CHECK(fs::exists(dir / "truth.json"));
  REQUIRE(run("fit --data " + d + "/train.json --iters 120 --burn 60 --r 3 --out " + d + "/fit.json --selection " + d +
              "/sel.csv") == 0);
  REQUIRE(run("predict --model " + d + "/fit.json --data " + d + "/test.json --out " + d + "/pred.csv") == 0);
  REQUIRE(run("evaluate --predictions " + d + "/pred.csv --data " + d + "/test.json --model " + d +
              "/fit.json --truth " + d + "/truth.json --out " + d + "/metrics.csv") == 0);
  const auto metrics = slurp(dir / "metrics.csv");
  CHECK(metrics.find("MSE") != std::string::npos);
  CHECK(metrics.find("AUC") != std::string::npos);
  CHECK(run("scree --data " + d + "/train.json") == 0);

  // Same seed, same archive.
  REQUIRE(run("fit --data " + d + "/train.json --iters 120 --burn 60 --r 3 --out " + d + "/fit2.json") == 0);
  CHECK(slurp(dir / "fit.json") == slurp(dir / "fit2.json"));
}

TEST_CASE("user errors exit with status one") {
  CHECK(run("fit --data /nonexistent/train.json --out /tmp/x.json") == 1);
  CHECK(run("no-such-command") == 1);
  CHECK(run("simulate --scenario 7 --out /tmp/bipmixed_cli_bad") == 1);
  const fs::path cfg = fs::temp_directory_path() / "bipmixed_bad_config.json";
  std::ofstream(cfg) << R"({"model": {"rank": 2}})";
  CHECK(run("--config " + cfg.string() + " fit --out /tmp/x.json") == 1);
}
