#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gradclust/gradient.hpp"
#include "gradclust/model.hpp"
#include "gradclust/rng.hpp"

namespace gradclust {

enum class Regime { theory, practical };

std::string to_string(Regime regime);
Regime regime_from_string(const std::string& name);

/// Parameters of candidate generation. In the theory regime every field follows
/// the closed-form choices; the practical regime fills them from data-scale
/// defaults or from the exact smoothed coefficient (see calibrated_params).
struct AlgoParams {
  Regime regime = Regime::practical;
  bool calibrated = false;

  int k = 1;
  double beta = 1.0;
  double u0 = 1.0;
  double kappa = 1.0;

  double delta = 0.2;
  double rho = 0.5;
  double Delta = 0.0;  // 0 when unset
  double w0 = 0.0;
  double xi0 = 1.0;
  double gamma = 0.0;              // sqrt(1/2e pi) t - (2k / kappa pi) t^2, t = Delta / xi0
  double gamma_closed_form = 0.0;  // kappa rho / (4e (rho + kappa)^2)
  double c1 = 0.0;
  double c2 = 0.0;

  std::size_t m0 = 5000;
  std::size_t n = 5000;
  std::size_t n0 = 20000;

  /// When set, w0 is resolved after estimation so that this fraction of the
  /// probes (by norm) is retained.
  std::optional<double> threshold_quantile;

  /// (2k^2 / pi kappa) t^2 - rho gamma, relative to rho gamma.
  double identity_residual() const;
};

struct ParamOverrides {
  std::optional<double> delta, rho, Delta, w0, xi0, gamma, quantile;
  std::optional<std::size_t> m0, n, n0;
  std::optional<double> beta, u0, kappa;
};

/// c1 = beta Phi(-2 beta) e^{2 beta^2}, c2 = 8 beta e^{2 beta^2}.
double coefficient_c1(double beta);
double coefficient_c2(double beta);

/// Theory regime. Throws std::domain_error for delta outside (0, 0.5] and
/// std::invalid_argument for the other preconditions.
AlgoParams derive_params(int k, double u0, double kappa, double beta, double delta, double rho);

/// Desk-scale demo regime: xi0 = 2 sqrt(d), top 1% by norm retained, n = m0 = 5000.
AlgoParams practical_params(int d, int k, const ParamOverrides& overrides = {});

/// Practical regime with Delta and w0 chosen by the theory's two conditions
/// but with the exact coefficient g(z) = E f'(z + Z) in place of its
/// exponential bounds:
///   k g(Delta) = delta w0   and   u0 g(Delta / 2) = (1 + delta) w0,
/// and xi0 from the same Delta / xi0 ratio as the theory regime.
AlgoParams calibrated_params(int k, double u0, double kappa, double beta, double delta, double rho);

void apply_overrides(AlgoParams& params, const ParamOverrides& overrides);

struct Candidate {
  std::size_t index = 0;
  Vec xi;
  Vec w_raw;
  double norm = 0.0;
  bool retained = false;
  Vec w_unit;  // empty unless retained
};

struct CandidateSet {
  std::vector<Candidate> candidates;
  double threshold = 0.0;  // w0 actually applied
  double max_norm = 0.0;
  EstimatorKind estimator = EstimatorKind::kernel;

  std::size_t retained_count() const;
  std::vector<std::size_t> retained_indices() const;
  /// Retained indices sorted by decreasing norm (ties by index), truncated to `top` (0 = all).
  std::vector<std::size_t> top_by_norm(std::size_t top) const;
  /// Rows are the unit vectors of the given candidate indices.
  Mat unit_rows(const std::vector<std::size_t>& indices) const;
};

/// xi^i ~ N(0, xi0^2 I), probe i drawn from its own stream.
std::vector<Vec> generate_probes(int d, std::size_t m0, double xi0, const Rng& rng);

/// Algorithm 1. Throws EmptyCandidateSet when nothing clears the threshold.
CandidateSet generate_candidates(const GradientEstimator& estimator, const AlgoParams& params, std::size_t m0,
                                 const Rng& rng, unsigned threads = 1);

struct Region {
  enum class Kind { none, single, multiple };
  Kind kind = Kind::none;
  int unit = -1;  // 0-based, only for single

  std::string name() const;  // "R0", "R1".."Rk", "R*"
  bool operator==(const Region&) const = default;
};

/// Bands |<w^l, xi>| < Delta. Exhaustive and exclusive.
std::vector<Region> classify_regions(const SigmoidModel& model, const std::vector<Vec>& probes, double Delta);

struct Partition {
  std::vector<std::vector<std::size_t>> sets;  // sets[0] = C0, sets[l] = C_l
  std::vector<Region> regions;                 // one per probe
  std::vector<bool> good;                      // ||w_raw - wbar|| <= delta w0, one per probe
  std::vector<int> signs;                      // sign(u_l)
  std::vector<double> max_distance;            // max over C_l of ||w_unit - s_l w^l||, NaN if empty
  std::vector<double> region_frequency;        // [R0, R1..Rk, R*]
  std::vector<double> half_band_frequency;     // |z_l| < Delta/2, others >= Delta
  double gamma_observed = 0.0;                 // min over l of half_band_frequency
  double threshold = 0.0;

  std::size_t size(int set) const { return sets[static_cast<std::size_t>(set)].size(); }
  bool disjoint_cover(const CandidateSet& cs) const;
};

/// Diagnostic partition against ground truth; membership in the good set uses
/// smoothed_gradient as the target.
Partition partition_candidates(const CandidateSet& candidates, const SigmoidModel& model, const AlgoParams& params);

/// Sample-size shape of the recovery guarantee, unspecified absolute constants set to 1.
/// Only the dependence on the parameters is meaningful.
struct SampleSizeShape {
  double m0 = 0.0;
  double n0 = 0.0;
  double log10_n = 0.0;
};
SampleSizeShape theorem1_shape(const AlgoParams& params, int d, double M);

}  // namespace gradclust
