#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "gradclust/rng.hpp"

namespace gradclust {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class NoiseKind { noiseless, binary_mixture, truncated_additive };

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

/// Label noise. Every kind keeps E{y|x} = r(x).
///  - noiseless:          y = r(x)
///  - binary_mixture:     draw a unit l ~ u, emit +1 w.p. (1 + tanh(beta <w^l, x>)) / 2, else -1
///  - truncated_additive: y = r(x) + clamp(sigma * Z, -clip, clip), clip = 3 sigma
struct NoiseSpec {
  NoiseKind kind = NoiseKind::noiseless;
  double sigma = 0.0;

  double clip() const { return kind == NoiseKind::truncated_additive ? 3.0 * sigma : 0.0; }
};

/// r(x) = sum_l u_l tanh(beta <w^l, x>), columns of W are the w^l.
struct SigmoidModel {
  Mat W;
  Vec u;
  double beta = 1.0;
  bool mixture = false;
  NoiseSpec noise;
  std::uint64_t seed = 0;

  int d() const { return static_cast<int>(W.rows()); }
  int k() const { return static_cast<int>(W.cols()); }

  /// M: every label satisfies |y| <= M.
  double label_bound() const;

  /// Smallest |u_l|.
  double u0() const;
};

struct ValidationReport {
  bool unit_norm = false;
  bool weights_in_range = false;
  bool mixture_sum = true;
  bool well_conditioned = false;
  double max_norm_error = 0.0;
  double sigma_min = 0.0;  // kappa computed from W
  double u0 = 0.0;

  bool valid() const { return unit_norm && weights_in_range && mixture_sum && well_conditioned; }
};

/// Throws std::invalid_argument on structural problems (k > d, shape
/// mismatch, non-finite entries). Assumption violations are reported.
ValidationReport validate_model(const SigmoidModel& model, double kappa_floor = 1e-8);

/// Throws std::invalid_argument if the model fails validation.
void require_valid(const SigmoidModel& model);

double regression_value(const SigmoidModel& model, const Vec& x);

/// One call to the value oracle at x.
double sample_value_oracle(const SigmoidModel& model, const Vec& x, Rng& rng);

/// Same as sample_value_oracle but reuses the caller's projection buffer z = W^T x.
double sample_label_from_projection(const SigmoidModel& model, const Vec& z, Rng& rng);

struct Dataset {
  RowMat X;  // n x d, one covariate per row
  Vec y;
  std::uint64_t seed = 0;
  std::string model_id;

  std::size_t size() const { return static_cast<std::size_t>(y.size()); }
  int dim() const { return static_cast<int>(X.cols()); }
};

Dataset sample_gaussian_dataset(const SigmoidModel& model, std::size_t n, std::uint64_t seed);

/// First k standard basis vectors with uniform mixture weights.
SigmoidModel standard_basis_model(int d, int k, double beta = 1.0);

/// k = 2 unit vectors at angle theta in the (e1, e2) plane.
SigmoidModel angle_pair_model(int d, double theta, const Vec& u, double beta = 1.0);

/// Columns drawn uniformly on the sphere.
SigmoidModel random_model(int d, int k, const Vec& u, double beta, std::uint64_t seed);

}  // namespace gradclust
