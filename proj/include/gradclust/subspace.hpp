#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "gradclust/gradient.hpp"
#include "gradclust/model.hpp"
#include "gradclust/rng.hpp"

namespace gradclust {

struct SpanOptions {
  std::size_t probes = 200;
  double probe_scale = 1.0;  // xi ~ N(0, probe_scale^2 I)
  double rank_tol = 1e-10;   // relative to the top singular value
  unsigned threads = 1;
};

/// Top-k left singular directions of gradient estimates stacked as columns.
/// When fewer than k directions are numerically present the basis is
/// completed with random orthonormal columns and `padded` is set.
SubspaceEstimate estimate_span(const GradientEstimator& estimator, int k, const Rng& rng,
                               const SpanOptions& opts = {});

/// Kernel-estimator front end.
SubspaceEstimate estimate_span(const Dataset& dataset, int k, const Rng& rng, const SpanOptions& opts = {});

/// Orthonormal basis of the column span of M (d x k, full column rank).
SubspaceEstimate basis_of(const Mat& M, const std::string& method = "exact");

/// Principal angles in ascending order. Small angles come from the sines and
/// large ones from the cosines, so both ends stay accurate.
std::vector<double> principal_angles(const SubspaceEstimate& A, const SubspaceEstimate& B);
std::vector<double> principal_angles(const Mat& A, const Mat& B);

struct Projection {
  Vec full;    // P P^T x
  Vec coords;  // P^T x
};
Projection project(const SubspaceEstimate& basis, const Vec& x);

struct AngleBudget {
  double theta = 0.0;
  double theta_star = 0.0;
  bool feasible = false;
  std::optional<double> kappa_prime;  // sqrt(kappa^2 - (4k sin(theta/2))^2) when defined
};

/// theta* = min{2 asin(sqrt(3) kappa / 8k), 2 asin(delta^2 / 4k), u0 kappa}.
AngleBudget angle_budget(double theta, int k, double kappa, double u0, double delta);

/// |<w, w'> - <P^T w, P^T w'>| is at most this for unit w, w' in the true span.
double inner_product_distortion_bound(double theta, int k);

/// ||w - P P^T w|| is at most this for unit w in the true span.
double projection_residual_bound(double theta, int k);

}  // namespace gradclust
