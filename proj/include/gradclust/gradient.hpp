#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gradclust/model.hpp"
#include "gradclust/rng.hpp"

namespace gradclust {

enum class EstimatorKind { population, smoothed, oracle, kernel, projected };

std::string to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(const std::string& name);

struct GradientEstimate {
  Vec xi;
  Vec w;
  double norm = 0.0;
  EstimatorKind estimator = EstimatorKind::population;
  std::size_t samples_used = 0;

  static GradientEstimate make(Vec xi, Vec w, EstimatorKind kind, std::size_t samples);

  /// z_l = <w^l, xi>.
  Vec projections(const SigmoidModel& model) const { return model.W.transpose() * xi; }
};

/// f'(x) for f(x) = tanh(beta x), evaluated without overflow.
double fprime(double beta, double x);

/// E f'(z + Z), Z ~ N(0, 1), by Gauss-Hermite quadrature.
double smoothed_coefficient(double beta, double z);

struct CoefficientBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Closed-form sandwich for E f'(z + Z):
///   beta Phi(-2 beta) e^{-2 beta |z| + 2 beta^2} <= . <= 8 beta e^{-2 beta |z| + 2 beta^2}
CoefficientBounds fprime_bounds(double beta, double z);

/// Exact gradient: sum_l u_l f'(<w^l, xi>) w^l.
GradientEstimate population_gradient(const SigmoidModel& model, const Vec& xi);

/// Gaussian-smoothed gradient E_xi grad r(X), X ~ N(xi, I).
GradientEstimate smoothed_gradient(const SigmoidModel& model, const Vec& xi);

/// Value oracle: label at a query point.
using ValueOracle = std::function<double(const Vec& x, Rng& rng)>;

/// (1/n0) sum (x_i - xi) y_i with x_i ~ N(xi, I), y_i from the value oracle.
GradientEstimate estimate_gradient_oracle(const SigmoidModel& model, const Vec& xi, std::size_t n0, Rng& rng);
GradientEstimate estimate_gradient_oracle(const ValueOracle& oracle, const Vec& xi, std::size_t n0, Rng& rng);

/// Exponential-kernel local slope on a fixed dataset.
GradientEstimate estimate_gradient_kernel(const Dataset& dataset, const Vec& xi);

/// Kernel estimate from precomputed log-weights l_i = <xi, x_i>. Weights are
/// exp(l_i - max_j l_j), so adding a constant to every l_i changes nothing.
Vec kernel_slope_from_log_weights(const RowMat& X, const Vec& y, const Vec& log_weights);

/// Orthonormal basis of an estimated subspace.
struct SubspaceEstimate {
  Mat basis;  // d x k, orthonormal columns
  std::string method;
  std::size_t samples_used = 0;
  bool padded = false;

  int dim() const { return static_cast<int>(basis.rows()); }
  int rank() const { return static_cast<int>(basis.cols()); }
};

/// Kernel estimate computed on projections of covariates and probe onto the basis span.
GradientEstimate estimate_gradient_projected(const Dataset& dataset, const SubspaceEstimate& basis, const Vec& xi);

/// Common interface so candidate generation is agnostic to the estimator.
class GradientEstimator {
 public:
  virtual ~GradientEstimator() = default;
  virtual GradientEstimate estimate(const Vec& xi, Rng& rng) const = 0;

  /// Estimates at many probes; probe i uses rng.split(i). Output is in probe
  /// order and independent of the thread count.
  virtual std::vector<GradientEstimate> estimate_many(const std::vector<Vec>& probes, const Rng& rng,
                                                      unsigned threads) const;

  virtual EstimatorKind kind() const = 0;
  virtual int dim() const = 0;
};

class PopulationEstimator final : public GradientEstimator {
 public:
  explicit PopulationEstimator(SigmoidModel model) : model_(std::move(model)) {}
  GradientEstimate estimate(const Vec& xi, Rng&) const override { return population_gradient(model_, xi); }
  EstimatorKind kind() const override { return EstimatorKind::population; }
  int dim() const override { return model_.d(); }

 private:
  SigmoidModel model_;
};

class SmoothedEstimator final : public GradientEstimator {
 public:
  explicit SmoothedEstimator(SigmoidModel model) : model_(std::move(model)) {}
  GradientEstimate estimate(const Vec& xi, Rng&) const override { return smoothed_gradient(model_, xi); }
  EstimatorKind kind() const override { return EstimatorKind::smoothed; }
  int dim() const override { return model_.d(); }

 private:
  SigmoidModel model_;
};

class OracleEstimator final : public GradientEstimator {
 public:
  OracleEstimator(SigmoidModel model, std::size_t n0);
  GradientEstimate estimate(const Vec& xi, Rng& rng) const override;
  EstimatorKind kind() const override { return EstimatorKind::oracle; }
  int dim() const override { return model_.d(); }

 private:
  SigmoidModel model_;
  std::size_t n0_;
};

class KernelEstimator : public GradientEstimator {
 public:
  KernelEstimator(std::shared_ptr<const RowMat> X, std::shared_ptr<const Vec> y);
  explicit KernelEstimator(const Dataset& dataset);

  GradientEstimate estimate(const Vec& xi, Rng& rng) const override;
  std::vector<GradientEstimate> estimate_many(const std::vector<Vec>& probes, const Rng& rng,
                                              unsigned threads) const override;
  EstimatorKind kind() const override { return EstimatorKind::kernel; }
  int dim() const override { return static_cast<int>(X_->cols()); }
  std::size_t samples() const { return static_cast<std::size_t>(y_->size()); }

  /// Slopes for a block of probes (columns of `probes`), sharing one product X * probes.
  Mat slopes(const Mat& probes) const;

 private:
  std::shared_ptr<const RowMat> X_;
  std::shared_ptr<const Vec> y_;
};

class ProjectedEstimator final : public GradientEstimator {
 public:
  ProjectedEstimator(const Dataset& dataset, SubspaceEstimate basis);

  GradientEstimate estimate(const Vec& xi, Rng& rng) const override;
  std::vector<GradientEstimate> estimate_many(const std::vector<Vec>& probes, const Rng& rng,
                                              unsigned threads) const override;
  EstimatorKind kind() const override { return EstimatorKind::projected; }
  int dim() const override { return basis_.dim(); }
  const SubspaceEstimate& basis() const { return basis_; }

 private:
  SubspaceEstimate basis_;
  KernelEstimator coords_;
};

}  // namespace gradclust
