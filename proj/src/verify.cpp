#include "gradclust/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "gradclust/errors.hpp"
#include "gradclust/parallel.hpp"
#include "gradclust/quadrature.hpp"

namespace gradclust {

using nlohmann::json;

namespace {

constexpr double kE = 2.718281828459045;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

template <typename T, typename F>
std::vector<T> run_trials(std::size_t trials, unsigned threads, F&& fn) {
  std::vector<T> out(trials);
  parallel_chunks(trials, 8, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t t = b; t < e; ++t) out[t] = fn(t);
  });
  return out;
}

json to_json_vec(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json interval_json(const Interval& iv) { return json{{"lo", iv.lo}, {"hi", iv.hi}}; }

struct MeanSe {
  Vec mean;
  Vec se;
};

MeanSe mean_and_se(const std::vector<Vec>& xs) {
  const auto n = static_cast<double>(xs.size());
  MeanSe r{Vec::Zero(xs.front().size()), Vec::Zero(xs.front().size())};
  for (const auto& x : xs) r.mean += x;
  r.mean /= n;
  Vec var = Vec::Zero(r.mean.size());
  for (const auto& x : xs) var += (x - r.mean).cwiseAbs2();
  var /= (n - 1.0);
  r.se = (var / n).cwiseSqrt();
  return r;
}

CheckReport stein_report(const std::vector<Vec>& estimates, const Vec& target, std::uint64_t seed,
                         const SteinOptions& opts) {
  CheckReport rep;
  rep.name = "stein";
  rep.trials = opts.trials;
  rep.seed = seed;
  rep.negative_control = opts.bias_scale != 1.0;
  const MeanSe ms = mean_and_se(estimates);
  double worst = 0.0;
  bool ok = true;
  for (Eigen::Index j = 0; j < target.size(); ++j) {
    const double diff = std::abs(ms.mean(j) - target(j));
    if (diff > 4.0 * ms.se(j)) ok = false;
    if (ms.se(j) > 0.0) worst = std::max(worst, diff / ms.se(j));
  }
  rep.pass = ok;
  rep.stats = json{{"mean", to_json_vec(ms.mean)},
                   {"standard_error", to_json_vec(ms.se)},
                   {"target", to_json_vec(target)},
                   {"max_z", worst},
                   {"band_z", 4.0},
                   {"n0", opts.n0},
                   {"bias_scale", opts.bias_scale}};
  return rep;
}

}  // namespace

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need two or more points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

// ---------------------------------------------------------------------------

CheckReport check_stein(const SigmoidModel& model, const Vec& xi, std::uint64_t seed, const SteinOptions& opts) {
  if (opts.trials < 30) throw std::invalid_argument("check_stein: at least 30 trials required");
  Stopwatch sw;
  const Rng base = Rng(seed).split("stein");
  const auto est = run_trials<Vec>(opts.trials, opts.threads, [&](std::size_t t) {
    Rng r = base.split(static_cast<std::uint64_t>(t));
    return Vec(opts.bias_scale * estimate_gradient_oracle(model, xi, opts.n0, r).w);
  });
  auto rep = stein_report(est, smoothed_gradient(model, xi).w, seed, opts);
  rep.runtime_s = sw.seconds();
  return rep;
}

CheckReport check_stein(const ValueOracle& oracle, const Vec& target, const Vec& xi, std::uint64_t seed,
                        const SteinOptions& opts) {
  if (opts.trials < 30) throw std::invalid_argument("check_stein: at least 30 trials required");
  Stopwatch sw;
  const Rng base = Rng(seed).split("stein");
  const auto est = run_trials<Vec>(opts.trials, opts.threads, [&](std::size_t t) {
    Rng r = base.split(static_cast<std::uint64_t>(t));
    return Vec(opts.bias_scale * estimate_gradient_oracle(oracle, xi, opts.n0, r).w);
  });
  auto rep = stein_report(est, target, seed, opts);
  rep.runtime_s = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------

double kernel_tail_bound(double n, double delta, double xi_norm, int d, double M) {
  const double x2 = xi_norm * xi_norm;
  const double tilt = std::exp(x2);
  const double a = (10.0 * M * M * d + 49.0 * M * M * x2 + 17.0) * std::pow(2.0 * M * std::sqrt(d + x2) + 2.0 + delta, 2);
  const double b = (2.0 * M * M + 3.0 * d + 12.0 * x2 + 2.0) * (2.0 * M * xi_norm + 2.0 + delta);
  return tilt / (n * delta * delta) * a + tilt / (n * delta) * b;
}

CheckReport check_tail_scaling(const SigmoidModel& model, const Vec& xi, double delta, std::uint64_t seed,
                               const TailScalingOptions& opts) {
  if (opts.n_grid.size() < 3) throw std::invalid_argument("check_tail_scaling: need at least 3 sample sizes");
  const auto [mn, mx] = std::minmax_element(opts.n_grid.begin(), opts.n_grid.end());
  if (static_cast<double>(*mx) < 100.0 * static_cast<double>(*mn)) {
    throw std::invalid_argument("check_tail_scaling: sample sizes must span at least two decades");
  }
  if (!(delta > 0.0)) throw std::invalid_argument("check_tail_scaling: delta must be positive");
  Stopwatch sw;
  CheckReport rep;
  rep.name = "tail-scaling";
  rep.trials = opts.trials;
  rep.seed = seed;
  rep.negative_control = opts.target_scale != 1.0;

  const Vec target = opts.target_scale * smoothed_gradient(model, xi).w;
  const double M = model.label_bound();
  const double xi_norm = xi.norm();
  const Rng base = Rng(seed).split("tail-scaling");

  std::vector<double> ns, p_for_slope, mses;
  bool bound_ok = true;
  std::size_t bound_points = 0;
  json points = json::array(), bound_only = json::array();
  auto bound_point = [&](std::size_t n, double dlt, const std::vector<double>& errs, bool& applied) {
    const auto hits = static_cast<std::size_t>(std::count_if(errs.begin(), errs.end(), [&](double e) { return e >= dlt; }));
    const Interval iv = wilson_interval(hits, opts.trials);
    const double bound = kernel_tail_bound(static_cast<double>(n), dlt, xi_norm, model.d(), M);
    const bool vacuous = bound > 1.0;
    applied = !vacuous && xi_norm <= opts.bound_xi_limit;
    if (applied) {
      ++bound_points;
      if (iv.lo > bound) bound_ok = false;
    }
    return json{{"n", n},
                {"delta", dlt},
                {"exceed", hits},
                {"p_hat", static_cast<double>(hits) / static_cast<double>(opts.trials)},
                {"wilson99", interval_json(iv)},
                {"bound", bound},
                {"bound_status", vacuous ? "vacuous" : (applied ? "checked" : "not-applied")}};
  };
  for (const std::size_t n : opts.n_grid) {
    const Rng stream = base.split(static_cast<std::uint64_t>(n));
    const auto errs = run_trials<double>(opts.trials, opts.threads, [&](std::size_t t) {
      const auto ds = sample_gaussian_dataset(model, n, stream.split(static_cast<std::uint64_t>(t)).key());
      return (estimate_gradient_kernel(ds, xi).w - target).norm();
    });
    double mse = 0.0;
    for (double e : errs) mse += e * e / static_cast<double>(errs.size());
    bool applied = false;
    json pt = bound_point(n, delta, errs, applied);
    pt["mse"] = mse;
    const auto hits = pt["exceed"].get<std::size_t>();
    ns.push_back(static_cast<double>(n));
    // zero counts enter the fit through their upper endpoint, which can only flatten the slope
    p_for_slope.push_back(hits > 0 ? pt["p_hat"].get<double>() : pt["wilson99"]["hi"].get<double>());
    mses.push_back(mse);
    points.push_back(pt);
    for (double extra : opts.bound_deltas) bound_only.push_back(bound_point(n, extra, errs, applied));
  }
  const double slope = loglog_slope(ns, p_for_slope);
  const double mse_slope = loglog_slope(ns, mses);
  rep.pass = slope <= opts.max_slope && bound_ok;
  rep.stats = json{{"delta", delta},       {"xi_norm", xi_norm},   {"M", M},
                   {"points", points},     {"slope", slope},       {"max_slope", opts.max_slope},
                   {"mse_slope", mse_slope}, {"bound_points", bound_points}, {"bound_respected", bound_ok},
                   {"bound_only", bound_only}};
  if (bound_points == 0) rep.note = "computable bound vacuous or not applicable at every n; only the slope was checked";
  rep.runtime_s = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------

CheckReport check_oracle_tail(const SigmoidModel& model, const Vec& xi, double delta, std::uint64_t seed,
                              const OracleTailOptions& opts) {
  if (opts.n0_grid.size() < 2) throw std::invalid_argument("check_oracle_tail: need at least 2 sample sizes");
  Stopwatch sw;
  CheckReport rep;
  rep.name = "oracle-tail";
  rep.trials = opts.trials;
  rep.seed = seed;
  rep.negative_control = opts.heavy_tail_index > 0.0;
  if (!(delta > 0.0)) {
    rep.skipped = true;
    rep.note = "delta = 0: every estimate exceeds it, probability 1 at every n0";
    rep.stats = json{{"delta", delta}};
    return rep;
  }

  const Vec target = smoothed_gradient(model, xi).w;
  ValueOracle corrupted;
  if (opts.heavy_tail_index > 0.0) {
    const double alpha = opts.heavy_tail_index, scale = opts.heavy_tail_scale;
    corrupted = [&model, alpha, scale](const Vec& x, Rng& rng) {
      const double clean = sample_value_oracle(model, x, rng);
      const double mag = std::pow(rng.uniform(), -1.0 / alpha) - 1.0;
      return clean + (rng.uniform() < 0.5 ? -scale : scale) * mag;
    };
  }

  const Rng base = Rng(seed).split("oracle-tail");
  std::vector<Interval> ivs;
  json points = json::array();
  for (const std::size_t n0 : opts.n0_grid) {
    const Rng stream = base.split(static_cast<std::uint64_t>(n0));
    const auto errs = run_trials<double>(opts.trials, opts.threads, [&](std::size_t t) {
      Rng r = stream.split(static_cast<std::uint64_t>(t));
      const Vec w = corrupted ? estimate_gradient_oracle(corrupted, xi, n0, r).w
                              : estimate_gradient_oracle(model, xi, n0, r).w;
      return (w - target).norm();
    });
    const auto hits = static_cast<std::size_t>(std::count_if(errs.begin(), errs.end(), [&](double e) { return e >= delta; }));
    ivs.push_back(wilson_interval(hits, opts.trials));
    points.push_back(json{{"n0", n0},
                          {"exceed", hits},
                          {"p_hat", static_cast<double>(hits) / static_cast<double>(opts.trials)},
                          {"wilson99", interval_json(ivs.back())}});
  }
  // Faster than 1/n0: the upper end at the larger n0 must sit below the lower
  // end at the smaller one divided by the growth ratio.
  bool ok = true;
  json ratios = json::array();
  for (std::size_t i = 1; i < opts.n0_grid.size(); ++i) {
    const double growth = static_cast<double>(opts.n0_grid[i]) / static_cast<double>(opts.n0_grid[i - 1]);
    const bool step_ok = ivs[i].hi <= ivs[i - 1].lo / growth;
    ok = ok && step_ok;
    ratios.push_back(json{{"growth", growth}, {"decay_ok", step_ok}});
  }
  rep.pass = ok;
  rep.stats = json{{"delta", delta},
                   {"points", points},
                   {"steps", ratios},
                   {"heavy_tail_index", opts.heavy_tail_index},
                   {"heavy_tail_scale", opts.heavy_tail_scale}};
  rep.runtime_s = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------

double rectangle_probability(double e1, double e2, double sigma, double c) {
  if (!(std::abs(c) < 1.0)) throw std::invalid_argument("rectangle_probability: |c| must be below 1");
  const double s = sigma * std::sqrt(1.0 - c * c);
  auto integrand = [&](double a) {
    const double mean = c * a;
    return normal_pdf(a / sigma) / sigma * (normal_cdf((e2 - mean) / s) - normal_cdf((-e2 - mean) / s));
  };
  const int panels = 4000;  // composite Simpson on [-e1, e1]
  const double h = 2.0 * e1 / panels;
  double acc = integrand(-e1) + integrand(e1);
  for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * integrand(-e1 + i * h);
  return acc * h / 3.0;
}

CheckReport check_normality_probs(const SigmoidModel& model, double xi0, double Delta, std::uint64_t seed,
                                  const NormalityOptions& opts) {
  if (!(Delta > 0.0) || !(Delta < xi0)) {
    throw std::invalid_argument("check_normality_probs: requires 0 < Delta < xi0");
  }
  Stopwatch sw;
  CheckReport rep;
  rep.name = "normality";
  rep.trials = opts.trials;
  rep.seed = seed;
  rep.negative_control = opts.sampling_scale != 1.0;

  const int k = model.k(), d = model.d();
  const double kappa = validate_model(model).sigma_min;
  const double t = Delta / xi0;
  const double exact_single = 2.0 * normal_cdf(t) - 1.0;
  const double single_lower = std::sqrt(2.0 / (kE * M_PI)) * t;
  const double pair_bound = 2.0 * Delta * Delta / (M_PI * kappa * xi0 * xi0);

  // counts: k singles, then pairs in (l, l') lexicographic order
  const std::size_t pairs = static_cast<std::size_t>(k * (k - 1) / 2);
  const Rng base = Rng(seed).split("normality");
  const std::size_t block = 1000;
  const std::size_t blocks = (opts.trials + block - 1) / block;
  std::vector<std::vector<std::size_t>> partial(blocks, std::vector<std::size_t>(k + pairs, 0));
  parallel_chunks(blocks, 1, opts.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t bi = b; bi < e; ++bi) {
      Rng r = base.split(static_cast<std::uint64_t>(bi));
      Vec xi(d);
      auto& cnt = partial[bi];
      const std::size_t stop = std::min(opts.trials, (bi + 1) * block);
      for (std::size_t tr = bi * block; tr < stop; ++tr) {
        for (int j = 0; j < d; ++j) xi(j) = opts.sampling_scale * xi0 * r.normal();
        const Vec z = model.W.transpose() * xi;
        std::size_t p = static_cast<std::size_t>(k);
        for (int l = 0; l < k; ++l) {
          const bool in_l = std::abs(z(l)) < Delta;
          if (in_l) ++cnt[static_cast<std::size_t>(l)];
          for (int m = l + 1; m < k; ++m, ++p) {
            if (in_l && std::abs(z(m)) < Delta) ++cnt[p];
          }
        }
      }
    }
  });
  std::vector<std::size_t> counts(k + pairs, 0);
  for (const auto& c : partial) {
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += c[i];
  }

  bool ok = true;
  json singles = json::array(), pair_stats = json::array();
  for (int l = 0; l < k; ++l) {
    const Interval iv = wilson_interval(counts[static_cast<std::size_t>(l)], opts.trials);
    const bool covers = iv.contains(exact_single);
    const bool above = iv.hi >= single_lower;
    ok = ok && covers && above;
    singles.push_back(json{{"unit", l},
                           {"p_hat", static_cast<double>(counts[static_cast<std::size_t>(l)]) / opts.trials},
                           {"wilson99", interval_json(iv)},
                           {"exact", exact_single},
                           {"lower_bound", single_lower},
                           {"covers_exact", covers},
                           {"above_lower_bound", above}});
  }
  // Pairwise exact values are validated with a 4-standard-error Wilson band.
  constexpr double z4 = 4.0;
  std::size_t p = static_cast<std::size_t>(k);
  for (int l = 0; l < k; ++l) {
    for (int m = l + 1; m < k; ++m, ++p) {
      const double c = model.W.col(l).dot(model.W.col(m));
      const double exact = rectangle_probability(Delta, Delta, xi0, c);
      const Interval iv99 = wilson_interval(counts[p], opts.trials);
      const Interval iv4 = wilson_interval(counts[p], opts.trials, z4);
      const bool below = iv99.lo <= pair_bound && exact <= pair_bound;
      const bool agrees = iv4.contains(exact);
      ok = ok && below && agrees;
      pair_stats.push_back(json{{"units", {l, m}},
                                {"correlation", c},
                                {"p_hat", static_cast<double>(counts[p]) / opts.trials},
                                {"wilson99", interval_json(iv99)},
                                {"exact", exact},
                                {"bound", pair_bound},
                                {"below_bound", below},
                                {"exact_agrees", agrees}});
    }
  }

  // Parallelogram inequality on correlated two-dimensional Gaussians.
  json para = json::array();
  const struct {
    double c, e1, e2;
  } cases[] = {{0.0, 0.3, 0.3}, {0.5, 0.2, 0.4}, {0.9, 0.25, 0.25}, {-0.7, 0.1, 0.5}};
  Rng pr = base.split("parallelogram");
  for (const auto& cs : cases) {
    const double s = std::sqrt(1.0 - cs.c * cs.c);
    std::size_t hits = 0;
    for (std::size_t tr = 0; tr < opts.trials; ++tr) {
      const double a = pr.normal();
      const double b = cs.c * a + s * pr.normal();
      if (std::abs(a) < cs.e1 && std::abs(b) < cs.e2) ++hits;
    }
    const double exact = rectangle_probability(cs.e1, cs.e2, 1.0, cs.c);
    const double bound = 2.0 * cs.e1 * cs.e2 / (M_PI * s);
    const Interval iv99 = wilson_interval(hits, opts.trials);
    const Interval iv4 = wilson_interval(hits, opts.trials, z4);
    const bool below = exact <= bound && iv99.lo <= bound;
    const bool agrees = iv4.contains(exact);
    ok = ok && below && agrees;
    para.push_back(json{{"correlation", cs.c},
                        {"eps", {cs.e1, cs.e2}},
                        {"p_hat", static_cast<double>(hits) / opts.trials},
                        {"exact", exact},
                        {"bound", bound},
                        {"below_bound", below},
                        {"exact_agrees", agrees}});
  }

  rep.pass = ok;
  rep.stats = json{{"xi0", xi0},         {"Delta", Delta},          {"ratio", t},
                   {"kappa", kappa},     {"single", singles},       {"pairwise", pair_stats},
                   {"parallelogram", para}, {"sampling_scale", opts.sampling_scale}};
  rep.runtime_s = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------

std::vector<double> make_grid(double start, double stop, double step) {
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long i = 0; i <= count; ++i) out.push_back(start + static_cast<double>(i) * step);
  return out;
}

CheckReport check_coeff_bounds(const std::vector<double>& beta_grid, const std::vector<double>& z_grid,
                               const CoeffBoundOptions& opts) {
  if (beta_grid.empty() || z_grid.empty()) throw std::invalid_argument("check_coeff_bounds: empty grid");
  Stopwatch sw;
  CheckReport rep;
  rep.name = "coeff-bounds";
  rep.negative_control = opts.upper_scale != 1.0;

  std::size_t violations = 0, pointwise_violations = 0, points = 0;
  double min_lower_ratio = std::numeric_limits<double>::infinity();
  double max_upper_ratio = 0.0;
  json failures = json::array();
  for (double beta : beta_grid) {
    for (double z : z_grid) {
      ++points;
      const double g = smoothed_coefficient(beta, z);
      const auto b = fprime_bounds(beta, z);
      const double upper = opts.upper_scale * b.upper;
      min_lower_ratio = std::min(min_lower_ratio, g / b.lower);
      max_upper_ratio = std::max(max_upper_ratio, g / upper);
      if (!(b.lower < g && g < upper)) {
        ++violations;
        if (failures.size() < 10) failures.push_back(json{{"beta", beta}, {"z", z}, {"value", g}});
      }
      // f'(x) against beta e^{-2 beta |x|} and 4 beta e^{-2 beta |x|}; equality holds at x = 0
      const double fp = fprime(beta, z);
      const double base = beta * std::exp(-2.0 * beta * std::abs(z));
      const bool lower_ok = z == 0.0 ? fp == beta : base < fp;
      if (!lower_ok || !(fp <= 4.0 * base)) ++pointwise_violations;
    }
  }
  rep.trials = points;
  rep.pass = violations == 0 && pointwise_violations == 0;
  rep.stats = json{{"points", points},
                   {"violations", violations},
                   {"pointwise_violations", pointwise_violations},
                   {"min_value_over_lower", min_lower_ratio},
                   {"max_value_over_upper", max_upper_ratio},
                   {"upper_scale", opts.upper_scale},
                   {"failures", failures}};
  rep.runtime_s = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------

CheckReport check_moments(const SigmoidModel& model, const Vec& xi, std::uint64_t seed, const MomentOptions& opts) {
  if (opts.trials < 30) throw std::invalid_argument("check_moments: at least 30 trials required");
  Stopwatch sw;
  CheckReport rep;
  rep.name = "moments";
  rep.trials = opts.trials;
  rep.seed = seed;
  rep.negative_control = opts.omit_tilt;
  const int d = model.d();
  const Rng base = Rng(seed).split("moments");

  // layout: [z, u (d), s, v (d)]
  const auto samples = run_trials<Vec>(opts.trials, opts.threads, [&](std::size_t t) {
    const auto ds = sample_gaussian_dataset(model, opts.n, base.split(static_cast<std::uint64_t>(t)).key());
    const Vec K = (ds.X * xi).array().exp().matrix();
    Vec out(2 * d + 2);
    out(0) = K.sum();
    out.segment(1, d) = ds.X.transpose() * K;
    const Vec Ky = K.cwiseProduct(ds.y);
    out(d + 1) = Ky.sum();
    out.segment(d + 2, d) = ds.X.transpose() * Ky;
    return out;
  });

  const Vec z = model.W.transpose() * xi;
  double mean_r = 0.0;  // E_xi r(X)
  for (int l = 0; l < model.k(); ++l) {
    mean_r += model.u(l) *
              default_hermite_rule().expect([&](double x) { return std::tanh(model.beta * (z(l) + x)); });
  }
  const Vec wbar = smoothed_gradient(model, xi).w;
  const double tilt = opts.omit_tilt ? static_cast<double>(opts.n)
                                     : static_cast<double>(opts.n) * std::exp(xi.squaredNorm() / 2.0);
  Vec target(2 * d + 2);
  target(0) = tilt;
  target.segment(1, d) = tilt * xi;
  target(d + 1) = tilt * mean_r;
  target.segment(d + 2, d) = tilt * (mean_r * xi + wbar);  // E_xi X r(X) = xi E_xi r + E_xi grad r

  const MeanSe ms = mean_and_se(samples);
  bool ok = true;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < target.size(); ++j) {
    const double diff = std::abs(ms.mean(j) - target(j));
    if (diff > 4.0 * ms.se(j)) ok = false;
    if (ms.se(j) > 0.0) worst = std::max(worst, diff / ms.se(j));
  }
  rep.pass = ok;
  rep.stats = json{{"n", opts.n},         {"xi_norm", xi.norm()},        {"mean", to_json_vec(ms.mean)},
                   {"target", to_json_vec(target)}, {"standard_error", to_json_vec(ms.se)}, {"max_z", worst},
                   {"omit_tilt", opts.omit_tilt}};
  rep.runtime_s = sw.seconds();
  return rep;
}

CheckReport check_exact_oracles(std::uint64_t seed, std::size_t draws) {
  Stopwatch sw;
  CheckReport rep;
  rep.name = "exact-oracles";
  rep.trials = draws;
  rep.seed = seed;
  const Rng base = Rng(seed).split("exact-oracles");
  bool ok = true;
  json rows = json::array();

  const struct {
    double beta, z;
  } coeffs[] = {{1.0, 0.0}, {2.0, 1.5}, {0.5, -3.0}, {1.0, 4.0}};
  for (std::size_t c = 0; c < std::size(coeffs); ++c) {
    Rng r = base.split(static_cast<std::uint64_t>(c));
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
      const double v = fprime(coeffs[c].beta, coeffs[c].z + r.normal());
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sum2 / draws - mean * mean) / draws);
    const double exact = smoothed_coefficient(coeffs[c].beta, coeffs[c].z);
    const bool agrees = std::abs(mean - exact) <= 4.0 * se;
    ok = ok && agrees;
    rows.push_back(json{{"oracle", "smoothed_coefficient"},
                        {"beta", coeffs[c].beta},
                        {"z", coeffs[c].z},
                        {"exact", exact},
                        {"monte_carlo", mean},
                        {"standard_error", se},
                        {"agrees", agrees}});
  }

  {
    Rng r = base.split("band");
    const double t = 0.1;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < draws; ++i) hits += std::abs(r.normal()) < t;
    const double exact = 2.0 * normal_cdf(t) - 1.0;
    const Interval iv = wilson_interval(hits, draws, 4.0);
    ok = ok && iv.contains(exact);
    rows.push_back(json{{"oracle", "band_probability"}, {"t", t}, {"exact", exact},
                        {"monte_carlo", static_cast<double>(hits) / draws}, {"agrees", iv.contains(exact)}});
  }
  {
    Rng r = base.split("rectangle");
    const double c = 0.5, e1 = 0.4, e2 = 0.7, s = std::sqrt(1.0 - c * c);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < draws; ++i) {
      const double a = r.normal();
      const double b = c * a + s * r.normal();
      hits += std::abs(a) < e1 && std::abs(b) < e2;
    }
    const double exact = rectangle_probability(e1, e2, 1.0, c);
    const Interval iv = wilson_interval(hits, draws, 4.0);
    ok = ok && iv.contains(exact);
    rows.push_back(json{{"oracle", "rectangle_probability"}, {"correlation", c}, {"exact", exact},
                        {"monte_carlo", static_cast<double>(hits) / draws}, {"agrees", iv.contains(exact)}});
  }
  rep.pass = ok;
  rep.stats = json{{"comparisons", rows}};
  rep.runtime_s = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------

Theorem1Result run_theorem1_experiment(const Theorem1Config& cfg) {
  Stopwatch sw;
  require_valid(cfg.model);
  const Rng root(cfg.seed);
  const AlgoParams& params = cfg.params;

  std::unique_ptr<GradientEstimator> estimator;
  if (cfg.estimator == EstimatorKind::oracle) {
    estimator = std::make_unique<OracleEstimator>(cfg.model, params.n0);
  } else if (cfg.estimator == EstimatorKind::kernel) {
    estimator = std::make_unique<KernelEstimator>(sample_gaussian_dataset(cfg.model, params.n, root.split("dataset").key()));
  } else {
    throw ConfigError("run_theorem1_experiment: estimator must be oracle or kernel");
  }

  Theorem1Result res;
  res.candidates = generate_candidates(*estimator, params, params.m0, root.split("candidates"), cfg.threads);
  res.partition = partition_candidates(res.candidates, cfg.model, params);

  const int k = cfg.model.k();
  const auto chosen = res.candidates.top_by_norm(cfg.top);
  bool clustered = false;
  if (chosen.size() >= static_cast<std::size_t>(k)) {
    KMeansOptions ko;
    ko.antipodal = cfg.sign_invariant;
    ko.threads = cfg.threads;
    res.clusters = spherical_kmeans(res.candidates.unit_rows(chosen), k, root.split("cluster"), ko);
    res.match = match_to_truth(res.clusters.centers, cfg.model.W, cfg.sign_invariant);
    clustered = true;
  }

  const double m0 = static_cast<double>(params.m0);
  const double gamma = params.regime == Regime::theory ? params.gamma : res.partition.gamma_observed;
  const bool disjoint = res.partition.disjoint_cover(res.candidates);
  bool close = true, big = true;
  json per_unit = json::array();
  for (int l = 0; l < k; ++l) {
    const double dist = res.partition.max_distance[static_cast<std::size_t>(l)];
    const std::size_t size = res.partition.size(l + 1);
    const bool unit_close = size > 0 && dist <= 6.0 * params.delta;
    const bool unit_big = static_cast<double>(size) >= gamma * m0 / 2.0;
    close = close && unit_close;
    big = big && unit_big;
    per_unit.push_back(json{{"unit", l},
                            {"size", size},
                            {"sign", res.partition.signs[static_cast<std::size_t>(l)]},
                            {"max_distance", std::isnan(dist) ? json(nullptr) : json(dist)},
                            {"within_6delta", unit_close},
                            {"size_ok", unit_big}});
  }
  const double c0_limit = 2.0 * params.rho * gamma * m0;
  const bool small_c0 = static_cast<double>(res.partition.size(0)) <= c0_limit;

  CheckReport& rep = res.report;
  rep.name = "theorem1";
  rep.seed = cfg.seed;
  rep.trials = params.m0;
  rep.pass = disjoint && close && big && small_c0;
  rep.stats = json{{"estimator", to_string(cfg.estimator)},
                   {"regime", to_string(params.regime)},
                   {"calibrated", params.calibrated},
                   {"m0", params.m0},
                   {"retained", res.candidates.retained_count()},
                   {"threshold", res.candidates.threshold},
                   {"Delta", params.Delta},
                   {"xi0", params.xi0},
                   {"delta", params.delta},
                   {"rho", params.rho},
                   {"gamma_used", gamma},
                   {"gamma_formula", params.gamma},
                   {"region_frequency", res.partition.region_frequency},
                   {"half_band_frequency", res.partition.half_band_frequency},
                   {"disjoint_cover", disjoint},
                   {"C0", res.partition.size(0)},
                   {"C0_limit", c0_limit},
                   {"C0_ok", small_c0},
                   {"units", per_unit},
                   {"min_size_limit", gamma * m0 / 2.0},
                   {"clustered", clustered},
                   {"match_max_error", clustered ? json(res.match.max_error) : json(nullptr)}};
  rep.runtime_s = sw.seconds();
  return res;
}

// ---------------------------------------------------------------------------

namespace {

SigmoidModel signed_pair_model() {
  // d = 4, unit vectors at 60 degrees, one negative weight
  Vec u(2);
  u << 0.6, -0.4;
  SigmoidModel m = angle_pair_model(4, M_PI / 3.0, u, 1.0);
  m.mixture = false;
  return m;
}

SigmoidModel orthonormal_pair_model() {
  SigmoidModel m = standard_basis_model(4, 2, 1.0);
  return m;
}

Vec fixed_probe(int d, double a, double b) {
  Vec xi = Vec::Zero(d);
  xi(0) = a;
  xi(1) = b;
  return xi;
}

Theorem1Config theorem1_defaults(std::uint64_t seed, unsigned threads) {
  Theorem1Config cfg;
  cfg.model = orthonormal_pair_model();
  cfg.model.mixture = false;
  cfg.model.u << 0.5, -0.5;
  cfg.estimator = EstimatorKind::oracle;
  cfg.params = calibrated_params(2, 0.5, validate_model(cfg.model).sigma_min, 1.0, 0.2, 0.5);
  cfg.params.m0 = 4000;
  cfg.top = 0;
  cfg.sign_invariant = true;
  cfg.seed = seed;
  cfg.threads = threads;
  return cfg;
}

}  // namespace

const std::vector<std::string>& suite_check_names() {
  static const std::vector<std::string> names = {
      "coeff-bounds",          "exact-oracles",    "stein",          "stein-zero",
      "moments",               "tail-scaling",     "oracle-tail",    "normality",
      "normality-angle",       "theorem1",         "coeff-bounds-negative",
      "stein-negative",        "moments-negative", "tail-scaling-negative",
      "oracle-tail-negative",  "normality-negative", "theorem1-negative"};
  return names;
}

bool is_known_check(const std::string& name) {
  const auto& n = suite_check_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

CheckReport run_named_check(const std::string& name, const SuiteOptions& opts) {
  const std::uint64_t seed = Rng(opts.seed).split(name).key();
  const unsigned th = opts.threads;
  CheckReport rep;

  if (name == "coeff-bounds" || name == "coeff-bounds-negative") {
    CoeffBoundOptions o;
    if (name == "coeff-bounds-negative") o.upper_scale = 0.01;
    rep = check_coeff_bounds({0.5, 1.0, 2.0}, make_grid(-5.0, 5.0, 0.25), o);
  } else if (name == "exact-oracles") {
    rep = check_exact_oracles(seed);
  } else if (name == "stein" || name == "stein-negative") {
    SteinOptions o;
    o.threads = th;
    if (name == "stein-negative") o.bias_scale = 2.0;
    rep = check_stein(signed_pair_model(), fixed_probe(4, 0.4, -0.3), seed, o);
  } else if (name == "stein-zero") {
    SteinOptions o;
    o.threads = th;
    const ValueOracle zero = [](const Vec&, Rng&) { return 0.0; };
    rep = check_stein(zero, Vec::Zero(3), Vec::Zero(3), seed, o);
  } else if (name == "moments" || name == "moments-negative") {
    MomentOptions o;
    o.threads = th;
    o.omit_tilt = name == "moments-negative";
    rep = check_moments(signed_pair_model(), fixed_probe(4, 0.6, 0.8), seed, o);
  } else if (name == "tail-scaling" || name == "tail-scaling-negative") {
    TailScalingOptions o;
    o.threads = th;
    if (name == "tail-scaling-negative") o.target_scale = 2.0;
    SigmoidModel m = standard_basis_model(3, 1, 1.0);
    o.bound_deltas = {0.3};
    rep = check_tail_scaling(m, fixed_probe(3, 0.5, 0.0), 0.02, seed, o);
  } else if (name == "oracle-tail" || name == "oracle-tail-negative") {
    OracleTailOptions o;
    o.threads = th;
    if (name == "oracle-tail-negative") {
      o.heavy_tail_index = 1.1;
      o.heavy_tail_scale = 0.05;
    }
    rep = check_oracle_tail(signed_pair_model(), fixed_probe(4, 0.4, -0.3), 0.022, seed, o);
  } else if (name == "normality" || name == "normality-negative") {
    NormalityOptions o;
    o.threads = th;
    if (name == "normality-negative") o.sampling_scale = 1.5;
    rep = check_normality_probs(orthonormal_pair_model(), 10.0, 1.0, seed, o);
  } else if (name == "normality-angle") {
    NormalityOptions o;
    o.threads = th;
    rep = check_normality_probs(signed_pair_model(), 10.0, 1.0, seed, o);
  } else if (name == "theorem1" || name == "theorem1-negative") {
    Theorem1Config cfg = theorem1_defaults(seed, th);
    if (name == "theorem1-negative") {
      // keeping every probe puts the whole of R0 into C0
      cfg.params.w0 = 0.0;
      cfg.params.n0 = 2000;
    }
    rep = run_theorem1_experiment(cfg).report;
  } else {
    throw ConfigError("unknown check '" + name + "'");
  }
  rep.name = name;
  if (name.size() > 9 && name.substr(name.size() - 9) == "-negative") rep.negative_control = true;
  return rep;
}

}  // namespace gradclust
