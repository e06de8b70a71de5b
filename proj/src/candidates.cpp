#include "gradclust/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "gradclust/errors.hpp"
#include "gradclust/quadrature.hpp"

namespace gradclust {

namespace {

constexpr double kE = 2.718281828459045;

std::string format_number(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

// sqrt(1/2e pi) t - (2k / kappa pi) t^2
double gamma_from_ratio(double t, int k, double kappa) {
  return std::sqrt(1.0 / (2.0 * kE * M_PI)) * t - 2.0 * k / (kappa * M_PI) * t * t;
}

double xi0_factor(int k, double kappa, double rho) {
  return 2.0 * std::sqrt(2.0 * kE / M_PI) * (k / kappa) * (k / rho + 1.0);
}

void check_common(int k, double u0, double kappa, double beta, double delta, double rho) {
  if (!(delta > 0.0 && delta <= 0.5)) throw std::domain_error("delta must lie in (0, 0.5]");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0, 1)");
  if (!(u0 > 0.0 && u0 <= 1.0)) throw std::invalid_argument("u0 must lie in (0, 1]");
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (k < 1) throw std::invalid_argument("k must be positive");
}

std::size_t default_m0(double gamma, double rho, int k) {
  const double want = 50.0 * k / (gamma * rho);
  return static_cast<std::size_t>(std::clamp(std::ceil(want), 2000.0, 20000.0));
}

}  // namespace

EmptyCandidateSet::EmptyCandidateSet(double threshold, double max_norm)
    : std::runtime_error("empty candidate set: no gradient estimate reached w0 = " + format_number(threshold) +
                         " (largest observed norm " + format_number(max_norm) +
                         "); lower w0, use a quantile threshold, or increase the sample size"),
      threshold_(threshold),
      max_norm_(max_norm) {}

std::string to_string(Regime regime) { return regime == Regime::theory ? "theory" : "practical"; }

Regime regime_from_string(const std::string& name) {
  if (name == "theory") return Regime::theory;
  if (name == "practical") return Regime::practical;
  throw ConfigError("unknown regime '" + name + "' (expected theory or practical)");
}

double AlgoParams::identity_residual() const {
  const double t = Delta / xi0;
  const double lhs = 2.0 * k * k / (M_PI * kappa) * t * t;
  const double rhs = rho * gamma;
  return std::abs(lhs - rhs) / std::abs(rhs);
}

double coefficient_c1(double beta) { return beta * normal_cdf(-2.0 * beta) * std::exp(2.0 * beta * beta); }
double coefficient_c2(double beta) { return 8.0 * beta * std::exp(2.0 * beta * beta); }

AlgoParams derive_params(int k, double u0, double kappa, double beta, double delta, double rho) {
  check_common(k, u0, kappa, beta, delta, rho);
  AlgoParams p;
  p.regime = Regime::theory;
  p.k = k;
  p.u0 = u0;
  p.kappa = kappa;
  p.beta = beta;
  p.delta = delta;
  p.rho = rho;
  p.c1 = coefficient_c1(beta);
  p.c2 = coefficient_c2(beta);
  p.Delta = std::log((1.0 + delta) * p.c2 * k / (p.c1 * u0 * delta)) / beta;
  p.w0 = p.c1 * p.c1 * u0 * u0 * delta / ((1.0 + delta) * (1.0 + delta) * p.c2 * k);
  p.xi0 = xi0_factor(k, kappa, rho) * p.Delta;
  p.gamma = gamma_from_ratio(p.Delta / p.xi0, k, kappa);
  p.gamma_closed_form = kappa * rho / (4.0 * kE * (rho + kappa) * (rho + kappa));
  p.m0 = static_cast<std::size_t>(std::ceil(64.0 / (p.gamma * rho) * std::log(k / delta)));
  if (p.identity_residual() > 1e-9) throw std::logic_error("derive_params: rho-gamma identity violated");
  return p;
}

AlgoParams practical_params(int d, int k, const ParamOverrides& overrides) {
  if (d < 1 || k < 1) throw std::invalid_argument("practical_params: d and k must be positive");
  AlgoParams p;
  p.regime = Regime::practical;
  p.k = k;
  p.xi0 = 2.0 * std::sqrt(static_cast<double>(d));
  p.threshold_quantile = 0.01;
  p.m0 = 5000;
  p.n = 5000;
  p.c1 = coefficient_c1(p.beta);
  p.c2 = coefficient_c2(p.beta);
  apply_overrides(p, overrides);
  return p;
}

AlgoParams calibrated_params(int k, double u0, double kappa, double beta, double delta, double rho) {
  check_common(k, u0, kappa, beta, delta, rho);
  AlgoParams p;
  p.regime = Regime::practical;
  p.calibrated = true;
  p.k = k;
  p.u0 = u0;
  p.kappa = kappa;
  p.beta = beta;
  p.delta = delta;
  p.rho = rho;
  p.c1 = coefficient_c1(beta);
  p.c2 = coefficient_c2(beta);

  // u0 delta g(D/2) - (1 + delta) k g(D) changes sign once: g is even,
  // decreasing in |z|, and g(D) / g(D/2) decreases to 0.
  auto h = [&](double D) {
    return u0 * delta * smoothed_coefficient(beta, D / 2.0) - (1.0 + delta) * k * smoothed_coefficient(beta, D);
  };
  double lo = 0.0, hi = 1.0;
  while (h(hi) <= 0.0) {
    hi *= 2.0;
    if (hi > 1e3) throw std::runtime_error("calibrated_params: no band half-width found");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) > 0.0 ? hi : lo) = mid;
  }
  p.Delta = hi;
  p.w0 = k * smoothed_coefficient(beta, p.Delta) / delta;
  p.xi0 = xi0_factor(k, kappa, rho) * p.Delta;
  p.gamma = gamma_from_ratio(p.Delta / p.xi0, k, kappa);
  p.gamma_closed_form = kappa * rho / (4.0 * kE * (rho + kappa) * (rho + kappa));
  p.m0 = default_m0(p.gamma, rho, k);
  p.n0 = 85000;
  return p;
}

void apply_overrides(AlgoParams& p, const ParamOverrides& o) {
  if (o.delta) p.delta = *o.delta;
  if (o.rho) p.rho = *o.rho;
  if (o.Delta) p.Delta = *o.Delta;
  if (o.w0) {
    p.w0 = *o.w0;
    p.threshold_quantile.reset();
  }
  if (o.quantile) p.threshold_quantile = *o.quantile;
  if (o.xi0) p.xi0 = *o.xi0;
  if (o.gamma) p.gamma = *o.gamma;
  if (o.m0) p.m0 = *o.m0;
  if (o.n) p.n = *o.n;
  if (o.n0) p.n0 = *o.n0;
  if (o.beta) p.beta = *o.beta;
  if (o.u0) p.u0 = *o.u0;
  if (o.kappa) p.kappa = *o.kappa;
  if (p.threshold_quantile && !(*p.threshold_quantile > 0.0 && *p.threshold_quantile <= 1.0)) {
    throw ConfigError("threshold quantile must lie in (0, 1]");
  }
}

// ---------------------------------------------------------------------------

std::size_t CandidateSet::retained_count() const {
  return static_cast<std::size_t>(
      std::count_if(candidates.begin(), candidates.end(), [](const Candidate& c) { return c.retained; }));
}

std::vector<std::size_t> CandidateSet::retained_indices() const {
  std::vector<std::size_t> out;
  for (const auto& c : candidates) {
    if (c.retained) out.push_back(c.index);
  }
  return out;
}

std::vector<std::size_t> CandidateSet::top_by_norm(std::size_t top) const {
  std::vector<std::size_t> idx = retained_indices();
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return candidates[a].norm > candidates[b].norm; });
  if (top > 0 && idx.size() > top) idx.resize(top);
  return idx;
}

Mat CandidateSet::unit_rows(const std::vector<std::size_t>& indices) const {
  if (indices.empty()) return Mat();
  Mat out(static_cast<Eigen::Index>(indices.size()), candidates[indices[0]].w_unit.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& c = candidates.at(indices[r]);
    if (!c.retained) throw std::invalid_argument("unit_rows: candidate was not retained");
    out.row(static_cast<Eigen::Index>(r)) = c.w_unit.transpose();
  }
  return out;
}

std::vector<Vec> generate_probes(int d, std::size_t m0, double xi0, const Rng& rng) {
  std::vector<Vec> probes(m0);
  for (std::size_t i = 0; i < m0; ++i) {
    Rng local = rng.split(static_cast<std::uint64_t>(i));
    Vec xi(d);
    for (int j = 0; j < d; ++j) xi(j) = xi0 * local.normal();
    probes[i] = std::move(xi);
  }
  return probes;
}

CandidateSet generate_candidates(const GradientEstimator& estimator, const AlgoParams& params, std::size_t m0,
                                 const Rng& rng, unsigned threads) {
  if (m0 == 0) throw std::invalid_argument("generate_candidates: m0 must be at least 1");
  const auto probes = generate_probes(estimator.dim(), m0, params.xi0, rng.split("probes"));
  auto estimates = estimator.estimate_many(probes, rng.split("estimates"), threads);

  CandidateSet out;
  out.estimator = estimator.kind();
  out.candidates.resize(m0);
  std::vector<double> norms(m0);
  for (std::size_t i = 0; i < m0; ++i) {
    auto& c = out.candidates[i];
    c.index = i;
    c.xi = std::move(estimates[i].xi);
    c.w_raw = std::move(estimates[i].w);
    c.norm = estimates[i].norm;
    norms[i] = c.norm;
    if (!std::isfinite(c.norm)) throw std::runtime_error("generate_candidates: non-finite gradient estimate");
  }
  out.max_norm = *std::max_element(norms.begin(), norms.end());

  if (params.threshold_quantile) {
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(*params.threshold_quantile * static_cast<double>(m0))));
    std::vector<double> sorted = norms;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(keep - 1), sorted.end(),
                     std::greater<>());
    out.threshold = sorted[keep - 1];
  } else {
    out.threshold = params.w0;
  }

  for (auto& c : out.candidates) {
    c.retained = c.norm >= out.threshold && c.norm > 0.0;
    if (c.retained) c.w_unit = c.w_raw / c.norm;
  }
  if (out.retained_count() == 0) throw EmptyCandidateSet(out.threshold, out.max_norm);
  return out;
}

// ---------------------------------------------------------------------------

std::string Region::name() const {
  switch (kind) {
    case Kind::none: return "R0";
    case Kind::single: return "R" + std::to_string(unit + 1);
    case Kind::multiple: return "R*";
  }
  return "R0";
}

std::vector<Region> classify_regions(const SigmoidModel& model, const std::vector<Vec>& probes, double Delta) {
  std::vector<Region> out(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const Vec z = model.W.transpose() * probes[i];
    int below = 0, unit = -1;
    for (int l = 0; l < model.k(); ++l) {
      if (std::abs(z(l)) < Delta) {
        ++below;
        unit = l;
      }
    }
    if (below == 0) {
      out[i] = {Region::Kind::none, -1};
    } else if (below == 1) {
      out[i] = {Region::Kind::single, unit};
    } else {
      out[i] = {Region::Kind::multiple, -1};
    }
  }
  return out;
}

bool Partition::disjoint_cover(const CandidateSet& cs) const {
  std::vector<int> seen(cs.candidates.size(), 0);
  for (const auto& s : sets) {
    for (auto i : s) {
      if (i >= seen.size()) return false;
      ++seen[i];
    }
  }
  for (const auto& c : cs.candidates) {
    if (seen[c.index] != (c.retained ? 1 : 0)) return false;
  }
  return true;
}

Partition partition_candidates(const CandidateSet& cs, const SigmoidModel& model, const AlgoParams& params) {
  const int k = model.k();
  if (!(params.Delta > 0.0)) throw std::invalid_argument("partition_candidates: Delta must be set");
  Partition p;
  p.threshold = cs.threshold;
  p.sets.assign(static_cast<std::size_t>(k) + 1, {});
  p.max_distance.assign(static_cast<std::size_t>(k), std::numeric_limits<double>::quiet_NaN());
  p.signs.resize(static_cast<std::size_t>(k));
  for (int l = 0; l < k; ++l) p.signs[static_cast<std::size_t>(l)] = model.u(l) < 0.0 ? -1 : 1;

  std::vector<Vec> probes;
  probes.reserve(cs.candidates.size());
  for (const auto& c : cs.candidates) probes.push_back(c.xi);
  p.regions = classify_regions(model, probes, params.Delta);

  const double m0 = static_cast<double>(cs.candidates.size());
  p.region_frequency.assign(static_cast<std::size_t>(k) + 2, 0.0);
  p.half_band_frequency.assign(static_cast<std::size_t>(k), 0.0);
  p.good.resize(cs.candidates.size());
  const double tolerance = params.delta * cs.threshold;

  for (std::size_t i = 0; i < cs.candidates.size(); ++i) {
    const auto& c = cs.candidates[i];
    const Region& r = p.regions[i];
    const std::size_t slot = r.kind == Region::Kind::none     ? 0
                             : r.kind == Region::Kind::single ? static_cast<std::size_t>(r.unit) + 1
                                                              : static_cast<std::size_t>(k) + 1;
    p.region_frequency[slot] += 1.0 / m0;
    if (r.kind == Region::Kind::single) {
      const double z = model.W.col(r.unit).dot(c.xi);
      if (std::abs(z) < params.Delta / 2.0) p.half_band_frequency[static_cast<std::size_t>(r.unit)] += 1.0 / m0;
    }

    const Vec wbar = smoothed_gradient(model, c.xi).w;
    p.good[i] = (c.w_raw - wbar).norm() <= tolerance;
    if (!c.retained) continue;

    if (r.kind == Region::Kind::single && p.good[i]) {
      const auto l = static_cast<std::size_t>(r.unit);
      p.sets[l + 1].push_back(i);
      const double dist = (c.w_unit - p.signs[l] * model.W.col(r.unit)).norm();
      if (std::isnan(p.max_distance[l]) || dist > p.max_distance[l]) p.max_distance[l] = dist;
    } else {
      p.sets[0].push_back(i);
    }
  }
  p.gamma_observed = *std::min_element(p.half_band_frequency.begin(), p.half_band_frequency.end());
  return p;
}

SampleSizeShape theorem1_shape(const AlgoParams& p, int d, double M) {
  SampleSizeShape s;
  const double gr = p.gamma * p.rho;
  s.m0 = std::log(p.k / p.delta) / gr;
  s.n0 = d * M * M / (p.delta * p.delta * p.w0 * p.w0) * std::log(p.k / (gr * p.delta));
  const double prefactor = std::log10(std::pow(M, 4) * d * d / (p.delta * p.delta * p.w0 * p.w0));
  const double xi2 = p.xi0 * p.xi0;
  const double a = (1.0 + 7.0 * (1.0 + 2.0 / d) * xi2) * std::log10(p.k / (gr * p.delta));
  const double b = 4.0 * d * (1.0 / 7.0 + (1.0 + 2.0 / d) * xi2) / std::log(10.0);
  s.log10_n = prefactor + std::max(a, b);
  return s;
}

}  // namespace gradclust
