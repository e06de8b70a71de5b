#include <doctest.h>

#include <cmath>

#include "gradclust/gradient.hpp"
#include "gradclust/quadrature.hpp"
#include "gradclust/subspace.hpp"

using namespace gradclust;

namespace {

// Independent oracle: composite trapezoid on a wide, fine grid.
double trapezoid_smoothed(double beta, double z) {
  const double lo = -14.0, hi = 14.0;
  const int steps = 200000;
  const double h = (hi - lo) / steps;
  double acc = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double s = lo + i * h;
    const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
    const double sech = 1.0 / std::cosh(beta * (z + s));
    acc += w * beta * sech * sech * std::exp(-0.5 * s * s);
  }
  return acc * h / std::sqrt(2.0 * M_PI);
}

// Kernel slope written directly from its definition, without any shift.
Vec naive_kernel(const Dataset& ds, const Vec& xi) {
  const Vec K = (ds.X * xi).array().exp().matrix();
  const Vec bary = ds.X.transpose() * K / K.sum();
  Vec w = Vec::Zero(xi.size());
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i) w += K(i) * ds.y(i) * (ds.X.row(i).transpose() - bary);
  return w / K.sum();
}

SigmoidModel signed_model() {
  Vec u(2);
  u << 0.6, -0.4;
  return angle_pair_model(4, 1.1, u, 1.0);
}

}  // namespace

TEST_CASE("fprime agrees with beta sech^2 and is finite far out") {
  for (double beta : {0.5, 1.0, 2.0}) {
    for (double x : {-4.0, -1.0, -0.1, 0.0, 0.3, 2.5}) {
      const double sech = 1.0 / std::cosh(beta * x);
      CHECK(fprime(beta, x) == doctest::Approx(beta * sech * sech).epsilon(1e-13));
    }
  }
  CHECK(fprime(1.0, 0.0) == 1.0);
  CHECK(fprime(2.0, 0.0) == 2.0);
  CHECK(std::isfinite(fprime(1.0, 800.0)));
  CHECK(fprime(1.0, 800.0) >= 0.0);
}

TEST_CASE("pointwise sandwich at x = 3") {
  const double v = fprime(1.0, 3.0);
  CHECK(std::exp(-6.0) < v);
  CHECK(v <= 4.0 * std::exp(-6.0));
}

TEST_CASE("Gauss-Hermite smoothed coefficient against a trapezoid oracle") {
  // sech^2 has complex poles at distance pi / 2 beta, so a fixed rule loses
  // digits as beta grows. Measured worst relative gaps with 64 nodes over
  // z in [-10, 10]: 1.5e-13 at beta 0.5, 4.4e-9 at beta 1, 2.4e-4 at beta 2.
  struct Case {
    double beta, tol;
  };
  for (const auto [beta, tol] : {Case{0.5, 1e-11}, Case{1.0, 1e-8}, Case{2.0, 5e-4}}) {
    for (double z : {0.0, 0.75, 1.5, 3.0, 5.0, -2.0}) {
      const double ref = trapezoid_smoothed(beta, z);
      CHECK(smoothed_coefficient(beta, z) == doctest::Approx(ref).epsilon(tol));
    }
  }
  // more nodes close the gap at beta 2 (measured 1.7e-9 with 256)
  const auto rule = gauss_hermite(256);
  for (double z : {0.0, 1.5, -2.0}) {
    const double v = rule.expect([&](double x) { return fprime(2.0, z + x); });
    CHECK(v == doctest::Approx(trapezoid_smoothed(2.0, z)).epsilon(1e-8));
  }
}

TEST_CASE("coefficient bounds at beta = 1, z = 0") {
  const auto b = fprime_bounds(1.0, 0.0);
  const double phi_m2 = 0.5 * std::erfc(2.0 / std::sqrt(2.0));
  CHECK(b.lower == doctest::Approx(phi_m2 * std::exp(2.0)).epsilon(1e-12));
  CHECK(b.lower == doctest::Approx(0.168103).epsilon(1e-5));
  CHECK(b.upper == doctest::Approx(59.1124).epsilon(1e-5));
  const double g = smoothed_coefficient(1.0, 0.0);
  CHECK(b.lower < g);
  CHECK(g < b.upper);
}

TEST_CASE("gaussian helpers") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(2.0 * normal_cdf(0.1) - 1.0 == doctest::Approx(0.079656).epsilon(1e-5));
  CHECK(normal_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
  const auto& rule = default_hermite_rule();
  CHECK(rule.expect([](double x) { return x * x; }) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(rule.expect([](double x) { return x * x * x * x; }) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(rule.expect([](double x) { return std::cos(x); }) == doctest::Approx(std::exp(-0.5)).epsilon(1e-13));
}

TEST_CASE("population and smoothed gradients are weighted sums of the parameter vectors") {
  const auto m = signed_model();
  Vec xi(4);
  xi << 0.2, -0.7, 1.0, 0.5;
  const Vec z = m.W.transpose() * xi;
  Vec pop = Vec::Zero(4), smooth = Vec::Zero(4);
  for (int l = 0; l < 2; ++l) {
    pop += m.u(l) * fprime(m.beta, z(l)) * m.W.col(l);
    smooth += m.u(l) * smoothed_coefficient(m.beta, z(l)) * m.W.col(l);
  }
  CHECK((population_gradient(m, xi).w - pop).norm() < 1e-14);
  CHECK((smoothed_gradient(m, xi).w - smooth).norm() < 1e-14);
  CHECK(smoothed_gradient(m, xi).norm == doctest::Approx(smooth.norm()));
}

TEST_CASE("kernel estimator matches its definition and ignores weight shifts") {
  const auto m = signed_model();
  const auto ds = sample_gaussian_dataset(m, 3000, 3);
  Vec xi(4);
  xi << 0.5, -0.2, 0.1, 0.3;
  const Vec ref = naive_kernel(ds, xi);
  CHECK((estimate_gradient_kernel(ds, xi).w - ref).norm() < 1e-12);

  const Vec logw = ds.X * xi;
  const Vec shifted = (logw.array() + 700.0).matrix();
  CHECK((kernel_slope_from_log_weights(ds.X, ds.y, logw) - kernel_slope_from_log_weights(ds.X, ds.y, shifted)).norm() <
        1e-12);

  Vec far = xi * 60.0;  // plain exponentials would overflow here
  CHECK(estimate_gradient_kernel(ds, far).w.allFinite());
}

TEST_CASE("batched kernel estimates equal single-probe estimates and ignore the thread count") {
  const auto m = signed_model();
  const KernelEstimator est(sample_gaussian_dataset(m, 2000, 8));
  std::vector<Vec> probes;
  Rng r(4);
  for (int i = 0; i < 150; ++i) {
    Vec xi(4);
    for (int j = 0; j < 4; ++j) xi(j) = 2.0 * r.normal();
    probes.push_back(xi);
  }
  const auto one = est.estimate_many(probes, Rng(1), 1);
  const auto three = est.estimate_many(probes, Rng(1), 3);
  Rng unused(0);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    CHECK(one[i].w == three[i].w);
    const Vec single = est.estimate(probes[i], unused).w;
    CHECK((one[i].w - single).norm() <= 1e-12 * std::max(1.0, single.norm()));
  }
}

TEST_CASE("oracle estimator: streams are reproducible and thread-independent") {
  const auto m = signed_model();
  const OracleEstimator est(m, 500);
  std::vector<Vec> probes(40, Vec::Zero(4));
  for (std::size_t i = 0; i < probes.size(); ++i) probes[i](i % 4) = 0.1 * static_cast<double>(i);
  const auto a = est.estimate_many(probes, Rng(2), 1);
  const auto b = est.estimate_many(probes, Rng(2), 4);
  for (std::size_t i = 0; i < probes.size(); ++i) CHECK(a[i].w == b[i].w);
  CHECK(a[0].samples_used == 500);
  CHECK(a[0].estimator == EstimatorKind::oracle);
}

TEST_CASE("projected estimator on an in-span probe equals the projected full estimate") {
  const auto m = signed_model();
  const auto ds = sample_gaussian_dataset(m, 4000, 21);
  const SubspaceEstimate span = basis_of(m.W);
  const Vec xi = 0.8 * m.W.col(0) - 0.5 * m.W.col(1);
  const Vec full = estimate_gradient_kernel(ds, xi).w;
  const Vec proj = estimate_gradient_projected(ds, span, xi).w;
  CHECK((proj - span.basis * (span.basis.transpose() * full)).norm() < 1e-12);
}

TEST_CASE("estimator names round-trip") {
  for (auto k : {EstimatorKind::population, EstimatorKind::smoothed, EstimatorKind::oracle, EstimatorKind::kernel,
                 EstimatorKind::projected}) {
    CHECK(estimator_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS(estimator_kind_from_string("bogus"));
}
