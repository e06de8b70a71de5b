#include "gradclust/gradient.hpp"

#include <cmath>
#include <stdexcept>

#include "gradclust/errors.hpp"
#include "gradclust/parallel.hpp"
#include "gradclust/quadrature.hpp"

namespace gradclust {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::population: return "population";
    case EstimatorKind::smoothed: return "smoothed";
    case EstimatorKind::oracle: return "oracle";
    case EstimatorKind::kernel: return "kernel";
    case EstimatorKind::projected: return "projected";
  }
  return "population";
}

EstimatorKind estimator_kind_from_string(const std::string& name) {
  if (name == "population") return EstimatorKind::population;
  if (name == "smoothed") return EstimatorKind::smoothed;
  if (name == "oracle") return EstimatorKind::oracle;
  if (name == "kernel") return EstimatorKind::kernel;
  if (name == "projected") return EstimatorKind::projected;
  throw ConfigError("unknown estimator '" + name + "'");
}

GradientEstimate GradientEstimate::make(Vec xi, Vec w, EstimatorKind kind, std::size_t samples) {
  GradientEstimate g;
  g.norm = w.norm();
  g.xi = std::move(xi);
  g.w = std::move(w);
  g.estimator = kind;
  g.samples_used = samples;
  return g;
}

double fprime(double beta, double x) {
  const double t = std::exp(-2.0 * beta * std::abs(x));
  const double s = 1.0 + t;
  return 4.0 * beta * t / (s * s);
}

double smoothed_coefficient(double beta, double z) {
  return default_hermite_rule().expect([&](double x) { return fprime(beta, z + x); });
}

CoefficientBounds fprime_bounds(double beta, double z) {
  if (!(beta > 0.0)) throw std::invalid_argument("fprime_bounds: beta must be positive");
  const double tilt = std::exp(-2.0 * beta * std::abs(z) + 2.0 * beta * beta);
  return {beta * normal_cdf(-2.0 * beta) * tilt, 8.0 * beta * tilt};
}

GradientEstimate population_gradient(const SigmoidModel& model, const Vec& xi) {
  const Vec z = model.W.transpose() * xi;
  Vec coeff(model.k());
  for (int l = 0; l < model.k(); ++l) coeff(l) = model.u(l) * fprime(model.beta, z(l));
  return GradientEstimate::make(xi, model.W * coeff, EstimatorKind::population, 0);
}

GradientEstimate smoothed_gradient(const SigmoidModel& model, const Vec& xi) {
  const Vec z = model.W.transpose() * xi;
  Vec coeff(model.k());
  for (int l = 0; l < model.k(); ++l) coeff(l) = model.u(l) * smoothed_coefficient(model.beta, z(l));
  return GradientEstimate::make(xi, model.W * coeff, EstimatorKind::smoothed, 0);
}

GradientEstimate estimate_gradient_oracle(const SigmoidModel& model, const Vec& xi, std::size_t n0, Rng& rng) {
  if (n0 == 0) throw std::invalid_argument("estimate_gradient_oracle: n0 must be at least 1");
  const int d = model.d();
  const Vec z_center = model.W.transpose() * xi;
  Vec noise(d), z(model.k());
  Vec acc = Vec::Zero(d);
  for (std::size_t i = 0; i < n0; ++i) {
    for (int j = 0; j < d; ++j) noise(j) = rng.normal();
    z.noalias() = model.W.transpose() * noise;
    z += z_center;
    acc.noalias() += sample_label_from_projection(model, z, rng) * noise;
  }
  return GradientEstimate::make(xi, acc / static_cast<double>(n0), EstimatorKind::oracle, n0);
}

GradientEstimate estimate_gradient_oracle(const ValueOracle& oracle, const Vec& xi, std::size_t n0, Rng& rng) {
  if (n0 == 0) throw std::invalid_argument("estimate_gradient_oracle: n0 must be at least 1");
  const auto d = xi.size();
  Vec noise(d);
  Vec acc = Vec::Zero(d);
  for (std::size_t i = 0; i < n0; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) noise(j) = rng.normal();
    acc.noalias() += oracle(xi + noise, rng) * noise;
  }
  return GradientEstimate::make(xi, acc / static_cast<double>(n0), EstimatorKind::oracle, n0);
}

Vec kernel_slope_from_log_weights(const RowMat& X, const Vec& y, const Vec& log_weights) {
  const Eigen::Index n = X.rows();
  if (n == 0) throw std::invalid_argument("kernel estimator: empty dataset");
  const double shift = log_weights.maxCoeff();
  const Vec weights = (log_weights.array() - shift).exp().matrix();
  const double total = weights.sum();

  const Vec barycenter = (X.transpose() * weights) / total;
  Vec acc = Vec::Zero(X.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ky = weights(i) * y(i);
    if (ky == 0.0) continue;
    acc.noalias() += ky * (X.row(i).transpose() - barycenter);
  }
  return acc / total;
}

GradientEstimate estimate_gradient_kernel(const Dataset& dataset, const Vec& xi) {
  if (dataset.size() == 0) throw std::invalid_argument("kernel estimator: empty dataset");
  const Vec log_weights = dataset.X * xi;
  return GradientEstimate::make(xi, kernel_slope_from_log_weights(dataset.X, dataset.y, log_weights),
                                EstimatorKind::kernel, dataset.size());
}

GradientEstimate estimate_gradient_projected(const Dataset& dataset, const SubspaceEstimate& basis, const Vec& xi) {
  if (basis.basis.cols() == 0) throw std::invalid_argument("projected estimator: basis has no columns");
  if (dataset.size() == 0) throw std::invalid_argument("projected estimator: empty dataset");
  const RowMat coords = dataset.X * basis.basis;
  const Vec xi_coords = basis.basis.transpose() * xi;
  const Vec log_weights = coords * xi_coords;
  const Vec slope = kernel_slope_from_log_weights(coords, dataset.y, log_weights);
  return GradientEstimate::make(xi, basis.basis * slope, EstimatorKind::projected, dataset.size());
}

// ---------------------------------------------------------------------------

std::vector<GradientEstimate> GradientEstimator::estimate_many(const std::vector<Vec>& probes, const Rng& rng,
                                                               unsigned threads) const {
  std::vector<GradientEstimate> out(probes.size());
  parallel_chunks(probes.size(), 16, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng local = rng.split(static_cast<std::uint64_t>(i));
      out[i] = estimate(probes[i], local);
    }
  });
  return out;
}

OracleEstimator::OracleEstimator(SigmoidModel model, std::size_t n0) : model_(std::move(model)), n0_(n0) {
  if (n0_ == 0) throw std::invalid_argument("OracleEstimator: n0 must be at least 1");
}

GradientEstimate OracleEstimator::estimate(const Vec& xi, Rng& rng) const {
  return estimate_gradient_oracle(model_, xi, n0_, rng);
}

KernelEstimator::KernelEstimator(std::shared_ptr<const RowMat> X, std::shared_ptr<const Vec> y)
    : X_(std::move(X)), y_(std::move(y)) {
  if (!X_ || !y_ || X_->rows() == 0) throw std::invalid_argument("kernel estimator: empty dataset");
  if (X_->rows() != y_->size()) throw std::invalid_argument("kernel estimator: X and y lengths differ");
}

KernelEstimator::KernelEstimator(const Dataset& dataset)
    : KernelEstimator(std::make_shared<const RowMat>(dataset.X), std::make_shared<const Vec>(dataset.y)) {}

Mat KernelEstimator::slopes(const Mat& probes) const {
  const Mat log_weights = (*X_) * probes;
  Mat out(X_->cols(), probes.cols());
  for (Eigen::Index c = 0; c < probes.cols(); ++c) {
    out.col(c) = kernel_slope_from_log_weights(*X_, *y_, log_weights.col(c));
  }
  return out;
}

GradientEstimate KernelEstimator::estimate(const Vec& xi, Rng&) const {
  const Vec log_weights = (*X_) * xi;
  return GradientEstimate::make(xi, kernel_slope_from_log_weights(*X_, *y_, log_weights), EstimatorKind::kernel,
                                samples());
}

namespace {

constexpr std::size_t kProbeBlock = 64;

Mat gather(const std::vector<Vec>& probes, std::size_t begin, std::size_t end) {
  Mat block(probes[begin].size(), static_cast<Eigen::Index>(end - begin));
  for (std::size_t i = begin; i < end; ++i) block.col(static_cast<Eigen::Index>(i - begin)) = probes[i];
  return block;
}

}  // namespace

std::vector<GradientEstimate> KernelEstimator::estimate_many(const std::vector<Vec>& probes, const Rng&,
                                                             unsigned threads) const {
  std::vector<GradientEstimate> out(probes.size());
  parallel_chunks(probes.size(), kProbeBlock, threads, [&](std::size_t begin, std::size_t end) {
    const Mat w = slopes(gather(probes, begin, end));
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = GradientEstimate::make(probes[i], w.col(static_cast<Eigen::Index>(i - begin)), EstimatorKind::kernel,
                                      samples());
    }
  });
  return out;
}

ProjectedEstimator::ProjectedEstimator(const Dataset& dataset, SubspaceEstimate basis)
    : basis_(std::move(basis)),
      coords_(std::make_shared<const RowMat>(dataset.X * basis_.basis), std::make_shared<const Vec>(dataset.y)) {
  if (basis_.basis.cols() == 0) throw std::invalid_argument("projected estimator: basis has no columns");
  if (basis_.basis.rows() != dataset.X.cols()) throw std::invalid_argument("projected estimator: basis dimension");
}

GradientEstimate ProjectedEstimator::estimate(const Vec& xi, Rng&) const {
  const Vec slope = coords_.slopes(basis_.basis.transpose() * xi);
  return GradientEstimate::make(xi, basis_.basis * slope, EstimatorKind::projected, coords_.samples());
}

std::vector<GradientEstimate> ProjectedEstimator::estimate_many(const std::vector<Vec>& probes, const Rng&,
                                                                unsigned threads) const {
  std::vector<GradientEstimate> out(probes.size());
  parallel_chunks(probes.size(), kProbeBlock, threads, [&](std::size_t begin, std::size_t end) {
    const Mat slope = coords_.slopes(basis_.basis.transpose() * gather(probes, begin, end));
    const Mat w = basis_.basis * slope;
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = GradientEstimate::make(probes[i], w.col(static_cast<Eigen::Index>(i - begin)),
                                      EstimatorKind::projected, coords_.samples());
    }
  });
  return out;
}

}  // namespace gradclust
