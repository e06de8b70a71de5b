#include <CLI11.hpp>
#include <iostream>

#include "gradclust/errors.hpp"
#include "gradclust/run.hpp"

using namespace gradclust;

int main(int argc, char** argv) {
  CLI::App app{"Recover sigmoid-combination parameters from gradient estimates"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::optional<std::string> regime;
  std::vector<std::string> checks;
  bool negative = false;

  std::vector<CLI::App*> subs;
  for (const char* name : {"generate", "recover", "verify", "bench"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config or run manifest");
    sub->add_option("--seed", seed, "top-level seed");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--threads", threads, "worker threads (0 = all cores)");
    sub->add_option("--regime", regime, "parameter regime")->check(CLI::IsMember({"theory", "practical"}));
    subs.push_back(sub);
  }
  subs[2]->add_option("--check", checks, "check name (repeatable)");
  subs[2]->add_flag("--negative", negative, "run the negative controls");

  CLI11_PARSE(app, argc, argv);

  try {
    nlohmann::json j = config_path.empty() ? nlohmann::json::object() : nlohmann::json();
    RunConfig cfg;
    if (!config_path.empty()) {
      cfg = load_config(config_path);
    } else {
      cfg = config_from_json(j);
    }
    if (seed || regime || !checks.empty() || negative) {
      nlohmann::json resolved = config_to_json(cfg);
      if (seed) resolved["seed"] = *seed;
      if (regime) resolved["regime"] = *regime;
      if (!checks.empty()) resolved["checks"] = checks;
      if (negative) resolved["negative"] = true;
      const unsigned keep_threads = cfg.threads;
      const std::string keep_out = cfg.out;
      cfg = config_from_json(resolved, false);
      cfg.threads = keep_threads;
      cfg.out = keep_out;
    }
    if (out) cfg.out = *out;
    if (threads) cfg.threads = *threads;

    if (subs[0]->parsed()) return cmd_generate(cfg);
    if (subs[1]->parsed()) return cmd_recover(cfg);
    if (subs[2]->parsed()) return cmd_verify(cfg);
    return cmd_bench(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
}
