#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "gradclust/errors.hpp"
#include "gradclust/run.hpp"
#include "gradclust/serialize.hpp"

using namespace gradclust;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gradclust_test_run_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json small_kernel_config(const fs::path& out) {
  return json{{"model", {{"kind", "standard_basis"}, {"d", 3}, {"k", 3}}},
              {"estimator", "kernel"},
              {"n", 1000},
              {"m0", 300},
              {"top", 10},
              {"seed", 4},
              {"threads", 1},
              {"out", out.string()}};
}

int run_cli(const std::string& args) {
  const char* cli = std::getenv("GRADCLUST_CLI");
  REQUIRE(cli != nullptr);
  const int status = std::system((std::string(cli) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing fills defaults and rejects unknown fields") {
  const auto c = config_from_json(json::object(), false);
  CHECK(c.estimator == EstimatorKind::kernel);
  CHECK(c.sampling == Sampling::gaussian);
  CHECK(c.model.d() == 3);
  CHECK(c.top == 50);
  CHECK_THROWS_AS(config_from_json(json{{"bogus", 1}}, false), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"seed", "abc"}}, false), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"model", {{"kind", "hexagon"}}}}, false), ConfigError);
}

TEST_CASE("incompatible estimator and sampling name both fields") {
  try {
    config_from_json(json{{"estimator", "oracle"}}, false);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("estimator") != std::string::npos);
    CHECK(msg.find("sampling") != std::string::npos);
  }
  CHECK_THROWS_AS(config_from_json(json{{"estimator", "kernel"}, {"sampling", "oracle"}}, false), ConfigError);
  CHECK_NOTHROW(config_from_json(json{{"estimator", "oracle"}, {"sampling", "oracle"}}, false));
}

TEST_CASE("projected estimator needs a usable split") {
  CHECK_THROWS_AS(config_from_json(json{{"estimator", "projected"}, {"n1", 0}}, false), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"estimator", "projected"}, {"n1", 100}, {"n", 100}}, false), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"estimator", "projected"}, {"n1", 600}, {"n2", 600}, {"n", 1000}}, false),
                  ConfigError);
  CHECK(config_from_json(json{{"estimator", "projected"}, {"n1", 400}, {"n", 1000}}, false).projection);
}

TEST_CASE("environment variables override scalar fields") {
  setenv("GRADCLUST_SEED", "91", 1);
  setenv("GRADCLUST_ESTIMATOR", "oracle", 1);
  setenv("GRADCLUST_SAMPLING", "oracle", 1);
  const auto c = config_from_json(json{{"seed", 3}}, true);
  unsetenv("GRADCLUST_SEED");
  unsetenv("GRADCLUST_ESTIMATOR");
  unsetenv("GRADCLUST_SAMPLING");
  CHECK(c.seed == 91);
  CHECK(c.estimator == EstimatorKind::oracle);
  CHECK(config_from_json(json{{"seed", 3}}, true).seed == 3);
}

TEST_CASE("resolved config round-trips and leaves out threads and output path") {
  const auto c = config_from_json(small_kernel_config("somewhere"), false);
  const json j = config_to_json(c);
  CHECK_FALSE(j.contains("threads"));
  CHECK_FALSE(j.contains("out"));
  const auto again = config_from_json(j, false);
  CHECK(config_to_json(again) == j);
  CHECK(again.model.W == c.model.W);
  CHECK(stage_seed(4, "dataset") == stage_seed(4, "dataset"));
  CHECK(stage_seed(4, "dataset") != stage_seed(4, "cluster"));
}

TEST_CASE("generate is reproducible and its dataset reloads exactly") {
  const auto a = scratch("gen_a"), b = scratch("gen_b");
  auto cfg = config_from_json(small_kernel_config(a), false);
  REQUIRE(cmd_generate(cfg) == kExitOk);
  cfg.out = b.string();
  REQUIRE(cmd_generate(cfg) == kExitOk);
  for (const char* f : {"model.json", "dataset.jsonl", "manifest.json"}) CHECK(slurp(a / f) == slurp(b / f));

  const auto ds = read_dataset_jsonl(a / "dataset.jsonl");
  const auto direct = sample_gaussian_dataset(cfg.model, 1000, stage_seed(4, "dataset"));
  CHECK(ds.X == direct.X);
  CHECK(ds.y == direct.y);
  CHECK(model_from_json(read_json(a / "model.json")).W == cfg.model.W);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("recover writes its outputs and skips truth files without ground truth") {
  const auto a = scratch("rec_a");
  auto j = small_kernel_config(a);
  auto cfg = config_from_json(j, false);
  REQUIRE(cmd_recover(cfg) == kExitOk);
  for (const char* f : {"candidates.jsonl", "norms.csv", "clusters.json", "params.json", "summary.json",
                        "match.json", "errors.csv", "manifest.json"}) {
    CHECK(fs::exists(a / f));
  }
  const json manifest = read_json(a / "manifest.json");
  CHECK(manifest["config"] == config_to_json(cfg));

  const auto b = scratch("rec_b");
  j["ground_truth"] = false;
  j["out"] = b.string();
  REQUIRE(cmd_recover(config_from_json(j, false)) == kExitOk);
  CHECK_FALSE(fs::exists(b / "match.json"));
  CHECK(fs::exists(b / "summary.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("an unreachable threshold exits with the empty-set code") {
  const auto a = scratch("empty");
  auto j = small_kernel_config(a);
  j["w0"] = 1e6;
  CHECK(cmd_recover(config_from_json(j, false)) == kExitEmpty);
  fs::remove_all(a);
}

TEST_CASE("command line exit codes") {
  const auto a = scratch("cli");
  CHECK(run_cli("verify --check nonsense --out " + a.string()) == kExitUsage);
  CHECK(run_cli("verify --negative --check coeff-bounds-negative --threads 1 --out " + a.string()) == kExitFail);
  CHECK(run_cli("verify --check coeff-bounds --threads 1 --out " + a.string()) == kExitOk);
  CHECK(fs::exists(a / "reports.json"));
  CHECK(run_cli("recover --regime sideways") != kExitOk);
  fs::remove_all(a);
}
