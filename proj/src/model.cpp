#include "gradclust/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gradclust/errors.hpp"

namespace gradclust {

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::noiseless: return "noiseless";
    case NoiseKind::binary_mixture: return "binary-mixture";
    case NoiseKind::truncated_additive: return "truncated-additive";
  }
  return "noiseless";
}

NoiseKind noise_kind_from_string(const std::string& name) {
  if (name == "noiseless") return NoiseKind::noiseless;
  if (name == "binary-mixture") return NoiseKind::binary_mixture;
  if (name == "truncated-additive") return NoiseKind::truncated_additive;
  throw ConfigError("unknown noise kind '" + name + "'");
}

double SigmoidModel::label_bound() const {
  if (noise.kind == NoiseKind::binary_mixture) return 1.0;
  return u.lpNorm<1>() + noise.clip();
}

double SigmoidModel::u0() const { return u.size() == 0 ? 0.0 : u.cwiseAbs().minCoeff(); }

namespace {

void check_structure(const SigmoidModel& m) {
  if (m.W.rows() == 0 || m.W.cols() == 0) throw std::invalid_argument("model: W must be non-empty");
  if (m.k() > m.d()) throw std::invalid_argument("model: k > d");
  if (m.u.size() != m.W.cols()) throw std::invalid_argument("model: u length must equal the column count of W");
  if (!m.W.allFinite() || !m.u.allFinite()) throw std::invalid_argument("model: non-finite parameters");
  if (!(m.beta > 0.0) || !std::isfinite(m.beta)) throw std::invalid_argument("model: beta must be positive");
  if (m.noise.sigma < 0.0) throw std::invalid_argument("model: noise sigma must be non-negative");
}

}  // namespace

ValidationReport validate_model(const SigmoidModel& model, double kappa_floor) {
  check_structure(model);
  ValidationReport rep;
  for (int l = 0; l < model.k(); ++l) {
    rep.max_norm_error = std::max(rep.max_norm_error, std::abs(model.W.col(l).norm() - 1.0));
  }
  rep.unit_norm = rep.max_norm_error <= 1e-12;

  rep.u0 = model.u0();
  rep.weights_in_range = rep.u0 > 0.0 && model.u.cwiseAbs().maxCoeff() <= 1.0;
  if (model.mixture) {
    rep.mixture_sum = (model.u.array() >= 0.0).all() && std::abs(model.u.sum() - 1.0) <= 1e-12;
  }

  Eigen::JacobiSVD<Mat> svd(model.W);
  rep.sigma_min = svd.singularValues().minCoeff();
  rep.well_conditioned = rep.sigma_min >= kappa_floor;
  return rep;
}

void require_valid(const SigmoidModel& model) {
  const auto rep = validate_model(model);
  if (!rep.unit_norm) throw std::invalid_argument("model: parameter vectors must have unit norm");
  if (!rep.weights_in_range) throw std::invalid_argument("model: weights must satisfy 0 < |u_l| <= 1");
  if (!rep.mixture_sum) throw std::invalid_argument("model: mixture weights must be non-negative and sum to 1");
  if (!rep.well_conditioned) throw std::invalid_argument("model: W is rank deficient (sigma_min below floor)");
  if (model.noise.kind == NoiseKind::binary_mixture && !model.mixture) {
    throw ConfigError("binary-mixture noise requires a mixture model");
  }
}

double regression_value(const SigmoidModel& model, const Vec& x) {
  if (!x.allFinite()) throw std::domain_error("regression_value: non-finite input");
  const Vec z = model.W.transpose() * x;
  double r = 0.0;
  for (int l = 0; l < model.k(); ++l) r += model.u(l) * std::tanh(model.beta * z(l));
  return r;
}

double sample_label_from_projection(const SigmoidModel& model, const Vec& z, Rng& rng) {
  const int k = model.k();
  switch (model.noise.kind) {
    case NoiseKind::noiseless: {
      double r = 0.0;
      for (int l = 0; l < k; ++l) r += model.u(l) * std::tanh(model.beta * z(l));
      return r;
    }
    case NoiseKind::binary_mixture: {
      if (!model.mixture) throw ConfigError("binary-mixture noise requires a mixture model");
      double pick = rng.uniform();
      int unit = k - 1;
      for (int l = 0; l < k; ++l) {
        pick -= model.u(l);
        if (pick < 0.0) {
          unit = l;
          break;
        }
      }
      const double p_plus = 0.5 * (1.0 + std::tanh(model.beta * z(unit)));
      return rng.uniform() < p_plus ? 1.0 : -1.0;
    }
    case NoiseKind::truncated_additive: {
      double r = 0.0;
      for (int l = 0; l < k; ++l) r += model.u(l) * std::tanh(model.beta * z(l));
      const double c = model.noise.clip();
      const double eps = model.noise.sigma * rng.normal();
      return r + std::clamp(eps, -c, c);
    }
  }
  return 0.0;
}

double sample_value_oracle(const SigmoidModel& model, const Vec& x, Rng& rng) {
  if (!x.allFinite()) throw std::domain_error("sample_value_oracle: non-finite input");
  const Vec z = model.W.transpose() * x;
  return sample_label_from_projection(model, z, rng);
}

Dataset sample_gaussian_dataset(const SigmoidModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_gaussian_dataset: n must be at least 1");
  const int d = model.d();
  Dataset ds;
  ds.X.resize(static_cast<Eigen::Index>(n), d);
  ds.y.resize(static_cast<Eigen::Index>(n));
  ds.seed = seed;
  ds.model_id = "model-" + std::to_string(model.seed);

  Rng rng = Rng(seed).split("dataset");
  Rng covariates = rng.split("x");
  Rng labels = rng.split("y");
  Vec x(d), z(model.k());
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(j) = covariates.normal();
    z.noalias() = model.W.transpose() * x;
    ds.X.row(static_cast<Eigen::Index>(i)) = x.transpose();
    ds.y(static_cast<Eigen::Index>(i)) = sample_label_from_projection(model, z, labels);
  }
  return ds;
}

SigmoidModel standard_basis_model(int d, int k, double beta) {
  if (k > d || k < 1) throw std::invalid_argument("standard_basis_model: need 1 <= k <= d");
  SigmoidModel m;
  m.W = Mat::Identity(d, k);
  m.u = Vec::Constant(k, 1.0 / k);
  m.beta = beta;
  m.mixture = true;
  return m;
}

SigmoidModel angle_pair_model(int d, double theta, const Vec& u, double beta) {
  if (d < 2) throw std::invalid_argument("angle_pair_model: d must be at least 2");
  SigmoidModel m;
  m.W = Mat::Zero(d, 2);
  m.W(0, 0) = 1.0;
  m.W(0, 1) = std::cos(theta);
  m.W(1, 1) = std::sin(theta);
  m.u = u;
  m.beta = beta;
  m.mixture = (u.array() >= 0.0).all() && std::abs(u.sum() - 1.0) <= 1e-12;
  return m;
}

SigmoidModel random_model(int d, int k, const Vec& u, double beta, std::uint64_t seed) {
  SigmoidModel m;
  m.W.resize(d, k);
  Rng rng = Rng(seed).split("model");
  for (int l = 0; l < k; ++l) {
    for (int j = 0; j < d; ++j) m.W(j, l) = rng.normal();
    m.W.col(l).normalize();
  }
  m.u = u;
  m.beta = beta;
  m.mixture = (u.array() >= 0.0).all() && std::abs(u.sum() - 1.0) <= 1e-12;
  m.seed = seed;
  return m;
}

}  // namespace gradclust
