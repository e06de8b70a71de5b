#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradclust/candidates.hpp"
#include "gradclust/gradient.hpp"
#include "gradclust/model.hpp"

namespace gradclust {

enum class Sampling { gaussian, oracle };

std::string to_string(Sampling s);
Sampling sampling_from_string(const std::string& name);

/// Everything a run needs. Parsed from one JSON document; scalar fields can
/// be overridden from GRADCLUST_<FIELD> environment variables (upper case).
struct RunConfig {
  SigmoidModel model;  // always explicit after resolution
  nlohmann::json model_spec = nlohmann::json::object();
  std::optional<std::string> dataset_path;
  Sampling sampling = Sampling::gaussian;
  EstimatorKind estimator = EstimatorKind::kernel;
  Regime regime = Regime::practical;
  bool calibrated = false;
  ParamOverrides overrides;
  bool projection = false;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::size_t top = 50;
  bool sign_invariant = true;
  bool ground_truth = true;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0 = all available cores
  std::string out = "out";
  std::vector<std::string> checks;  // verify: empty = every positive check
  bool negative = false;            // verify: run the negative controls instead

  unsigned resolved_threads() const;
};

/// Field names accepted at the top level of a config document.
const std::vector<std::string>& config_fields();

/// Parses and validates. Throws ConfigError naming the offending fields.
RunConfig config_from_json(nlohmann::json j, bool use_env = true);
RunConfig load_config(const std::filesystem::path& path, bool use_env = true);

/// Fully resolved, thread-independent form. Feeding it back to
/// config_from_json reproduces the run.
nlohmann::json config_to_json(const RunConfig& cfg);

void validate_config(const RunConfig& cfg);

/// Labeled stage seed derived from the top-level seed.
std::uint64_t stage_seed(std::uint64_t seed, const std::string& stage);

AlgoParams resolve_params(const RunConfig& cfg);

/// Each command returns the process exit code and writes to cfg.out.
int cmd_generate(const RunConfig& cfg);
int cmd_recover(const RunConfig& cfg);
int cmd_verify(const RunConfig& cfg);
int cmd_bench(const RunConfig& cfg);

/// Exit codes.
constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitEmpty = 3;

}  // namespace gradclust
