#include <doctest.h>

#include <cmath>

#include "gradclust/errors.hpp"
#include "gradclust/model.hpp"

using namespace gradclust;

namespace {

SigmoidModel two_unit_model() {
  Vec u(2);
  u << 0.7, -0.3;
  return angle_pair_model(3, 0.9, u, 1.5);
}

}  // namespace

TEST_CASE("regression value matches a hand expansion") {
  const auto m = two_unit_model();
  Vec x(3);
  x << 0.4, -1.1, 2.0;
  const double z1 = 0.4;
  const double z2 = 0.4 * std::cos(0.9) - 1.1 * std::sin(0.9);
  const double expected = 0.7 * std::tanh(1.5 * z1) - 0.3 * std::tanh(1.5 * z2);
  CHECK(regression_value(m, x) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("label bound follows the noise kind") {
  auto m = standard_basis_model(4, 2, 1.0);
  CHECK(m.label_bound() == doctest::Approx(1.0));
  m.noise = {NoiseKind::truncated_additive, 0.1};
  CHECK(m.label_bound() == doctest::Approx(1.3));
  m.noise = {NoiseKind::binary_mixture, 0.0};
  CHECK(m.label_bound() == 1.0);
}

TEST_CASE("validation reports assumption violations and rejects bad structure") {
  auto m = two_unit_model();
  CHECK(validate_model(m).valid());
  CHECK(validate_model(m).sigma_min == doctest::Approx(std::sqrt(1.0 - std::cos(0.9))).epsilon(1e-12));

  auto scaled = m;
  scaled.W.col(0) *= 1.01;
  CHECK_FALSE(validate_model(scaled).unit_norm);
  CHECK_THROWS_AS(require_valid(scaled), std::invalid_argument);

  auto wide = m;
  wide.W = Mat::Identity(2, 3);
  wide.u = Vec::Constant(3, 0.3);
  CHECK_THROWS_AS(validate_model(wide), std::invalid_argument);

  auto parallel = m;
  parallel.W.col(1) = parallel.W.col(0);
  CHECK_FALSE(validate_model(parallel).well_conditioned);

  auto binary = m;
  binary.noise.kind = NoiseKind::binary_mixture;
  CHECK_THROWS_AS(require_valid(binary), ConfigError);
}

TEST_CASE("label noise keeps the conditional mean") {
  Vec x(3);
  x << 0.3, 0.8, -0.5;
  for (NoiseKind kind : {NoiseKind::binary_mixture, NoiseKind::truncated_additive}) {
    auto m = standard_basis_model(3, 3, 1.2);
    m.noise = {kind, kind == NoiseKind::truncated_additive ? 0.5 : 0.0};
    // truncation at a symmetric 3 sigma keeps the noise centered
    Rng rng(11);
    const int draws = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < draws; ++i) {
      const double y = sample_value_oracle(m, x, rng);
      CHECK(std::abs(y) <= m.label_bound() + 1e-12);
      sum += y;
      sum2 += y * y;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sum2 / draws - mean * mean) / draws);
    CHECK(std::abs(mean - regression_value(m, x)) <= 4.0 * se);
  }
}

TEST_CASE("datasets are reproducible from their seed") {
  const auto m = two_unit_model();
  const auto a = sample_gaussian_dataset(m, 500, 42);
  const auto b = sample_gaussian_dataset(m, 500, 42);
  const auto c = sample_gaussian_dataset(m, 500, 43);
  CHECK(a.X == b.X);
  CHECK(a.y == b.y);
  CHECK(a.X != c.X);
  for (Eigen::Index i = 0; i < a.X.rows(); ++i) {
    CHECK(a.y(i) == doctest::Approx(regression_value(m, a.X.row(i).transpose())).epsilon(1e-15));
  }
}

TEST_CASE("covariates are standard normal") {
  const auto ds = sample_gaussian_dataset(standard_basis_model(4, 1), 40000, 5);
  const Vec mean = ds.X.colwise().mean();
  const Mat centered = ds.X.rowwise() - mean.transpose();
  const Mat cov = centered.transpose() * centered / static_cast<double>(ds.X.rows() - 1);
  CHECK(mean.cwiseAbs().maxCoeff() < 4.0 / std::sqrt(40000.0));
  CHECK((cov - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 0.04);
}

TEST_CASE("model builders") {
  const auto sb = standard_basis_model(5, 3);
  CHECK(sb.W == Mat::Identity(5, 3));
  CHECK(sb.u.sum() == doctest::Approx(1.0));
  CHECK(sb.mixture);

  Vec u(2);
  u << 0.5, 0.5;
  const auto ap = angle_pair_model(4, M_PI / 3.0, u);
  CHECK(ap.W.col(0).dot(ap.W.col(1)) == doctest::Approx(0.5).epsilon(1e-15));

  const auto r1 = random_model(6, 3, Vec::Constant(3, 1.0 / 3.0), 1.0, 9);
  const auto r2 = random_model(6, 3, Vec::Constant(3, 1.0 / 3.0), 1.0, 9);
  CHECK(r1.W == r2.W);
  CHECK(validate_model(r1).unit_norm);
  CHECK_THROWS(standard_basis_model(2, 3));
}

TEST_CASE("rng streams split deterministically") {
  const Rng root(7);
  Rng a = root.split("probes"), b = root.split("probes"), c = root.split("labels");
  CHECK(a() == b());
  CHECK(root.split("probes").key() != c.key());
  CHECK(root.split(std::uint64_t{3}).key() == root.split(std::uint64_t{3}).key());
  CHECK(root.split(std::uint64_t{3}).key() != root.split(std::uint64_t{4}).key());
  Rng u(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}
