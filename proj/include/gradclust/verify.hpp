#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradclust/candidates.hpp"
#include "gradclust/cluster.hpp"
#include "gradclust/gradient.hpp"
#include "gradclust/model.hpp"

namespace gradclust {

struct CheckReport {
  std::string name;
  bool pass = false;
  bool skipped = false;
  bool negative_control = false;  // expected to fail
  nlohmann::json stats = nlohmann::json::object();
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double runtime_s = 0.0;
  std::string note;

  /// A negative control behaves as expected when it fails.
  bool as_expected() const { return skipped || (negative_control ? !pass : pass); }
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

constexpr double kZ99 = 2.5758293035489004;

Interval wilson_interval(std::size_t successes, std::size_t trials, double z = kZ99);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Stein identity: E (X - xi) y = wbar(xi).

struct SteinOptions {
  std::size_t trials = 200;
  std::size_t n0 = 2000;
  double bias_scale = 1.0;  // != 1 corrupts the estimator
  unsigned threads = 1;
};

CheckReport check_stein(const SigmoidModel& model, const Vec& xi, std::uint64_t seed, const SteinOptions& opts = {});

/// Generic form: labels from `oracle`, compared against `target`.
CheckReport check_stein(const ValueOracle& oracle, const Vec& target, const Vec& xi, std::uint64_t seed,
                        const SteinOptions& opts = {});

// ---------------------------------------------------------------------------
// Kernel estimator tail against n.

/// Computable right-hand side of the kernel estimator concentration bound.
double kernel_tail_bound(double n, double delta, double xi_norm, int d, double M);

struct TailScalingOptions {
  std::vector<std::size_t> n_grid = {1000, 10000, 100000};
  std::size_t trials = 500;
  double max_slope = -0.7;
  double bound_xi_limit = 1.5;
  double target_scale = 1.0;  // != 1 corrupts the comparison target
  /// Further thresholds at which only the computable bound is checked.
  std::vector<double> bound_deltas;
  unsigned threads = 1;
};

CheckReport check_tail_scaling(const SigmoidModel& model, const Vec& xi, double delta, std::uint64_t seed,
                               const TailScalingOptions& opts = {});

// ---------------------------------------------------------------------------
// Oracle estimator tail against n0.

struct OracleTailOptions {
  std::vector<std::size_t> n0_grid = {1000, 2000, 4000};
  std::size_t trials = 2000;
  /// Tail index of symmetric Pareto label corruption; 0 disables it.
  double heavy_tail_index = 0.0;
  double heavy_tail_scale = 0.0;
  unsigned threads = 1;
};

CheckReport check_oracle_tail(const SigmoidModel& model, const Vec& xi, double delta, std::uint64_t seed,
                              const OracleTailOptions& opts = {});

// ---------------------------------------------------------------------------
// Band probabilities under xi ~ N(0, xi0^2 I).

/// P(|Z1| < e1, |Z2| < e2) for centered (Z1, Z2) with variance sigma^2 and correlation c.
double rectangle_probability(double e1, double e2, double sigma, double c);

struct NormalityOptions {
  std::size_t trials = 100000;
  double sampling_scale = 1.0;  // != 1 corrupts the probe sampler
  unsigned threads = 1;
};

/// Throws std::invalid_argument unless Delta < xi0.
CheckReport check_normality_probs(const SigmoidModel& model, double xi0, double Delta, std::uint64_t seed,
                                  const NormalityOptions& opts = {});

// ---------------------------------------------------------------------------
// Coefficient sandwich.

struct CoeffBoundOptions {
  double upper_scale = 1.0;  // != 1 corrupts the upper bound
};

CheckReport check_coeff_bounds(const std::vector<double>& beta_grid, const std::vector<double>& z_grid,
                               const CoeffBoundOptions& opts = {});

/// Grid {start, start + step, ..., stop} built from integer steps.
std::vector<double> make_grid(double start, double stop, double step);

// ---------------------------------------------------------------------------
// Kernel-sum moments z, u, s, v.

struct MomentOptions {
  std::size_t n = 200;
  std::size_t trials = 400;
  bool omit_tilt = false;  // drops e^{|xi|^2/2} from the targets
  unsigned threads = 1;
};

CheckReport check_moments(const SigmoidModel& model, const Vec& xi, std::uint64_t seed,
                          const MomentOptions& opts = {});

/// Quadrature and Gaussian-CDF oracles against brute-force Monte Carlo.
CheckReport check_exact_oracles(std::uint64_t seed, std::size_t draws = 1000000);

// ---------------------------------------------------------------------------
// Candidate partition structure.

struct Theorem1Config {
  SigmoidModel model;
  EstimatorKind estimator = EstimatorKind::oracle;
  AlgoParams params;
  std::size_t top = 0;  // candidates passed to clustering, 0 = all retained
  bool sign_invariant = true;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct Theorem1Result {
  CheckReport report;
  CandidateSet candidates;
  Partition partition;
  ClusterResult clusters;
  MatchReport match;
};

Theorem1Result run_theorem1_experiment(const Theorem1Config& config);

// ---------------------------------------------------------------------------

struct SuiteOptions {
  std::uint64_t seed = 20240601;
  unsigned threads = 1;
};

/// Registered check names, negative controls last.
const std::vector<std::string>& suite_check_names();
bool is_known_check(const std::string& name);
CheckReport run_named_check(const std::string& name, const SuiteOptions& opts);

}  // namespace gradclust
