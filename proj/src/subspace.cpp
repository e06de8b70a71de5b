#include "gradclust/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "gradclust/candidates.hpp"

namespace gradclust {

namespace {

void check_orthonormal(const Mat& P, const char* who) {
  if (P.cols() == 0) throw std::invalid_argument(std::string(who) + ": empty basis");
  const double err = (P.transpose() * P - Mat::Identity(P.cols(), P.cols())).cwiseAbs().maxCoeff();
  if (err > 1e-8) throw std::invalid_argument(std::string(who) + ": basis is not orthonormal");
}

}  // namespace

SubspaceEstimate estimate_span(const GradientEstimator& estimator, int k, const Rng& rng, const SpanOptions& opts) {
  const int d = estimator.dim();
  if (k < 1 || k > d) throw std::invalid_argument("estimate_span: need 1 <= k <= d");
  if (opts.probes == 0) throw std::invalid_argument("estimate_span: probe count must be positive");

  const auto probes = generate_probes(d, opts.probes, opts.probe_scale, rng.split("span-probes"));
  const auto est = estimator.estimate_many(probes, rng.split("span-estimates"), opts.threads);
  Mat stack(d, static_cast<Eigen::Index>(est.size()));
  for (std::size_t i = 0; i < est.size(); ++i) stack.col(static_cast<Eigen::Index>(i)) = est[i].w;

  Eigen::JacobiSVD<Mat> svd(stack, Eigen::ComputeThinU);
  const Vec& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > opts.rank_tol * std::max(sv(0), 1e-300)) ++rank;
  }

  SubspaceEstimate out;
  out.method = "svd-" + to_string(estimator.kind());
  out.samples_used = est.empty() ? 0 : est.front().samples_used;
  const int keep = std::min(rank, k);
  Mat basis(d, k);
  basis.leftCols(keep) = svd.matrixU().leftCols(keep);
  if (keep < k) {
    std::cerr << "warning: estimate_span found rank " << keep << " < k = " << k
              << "; completing the basis with random orthonormal columns\n";
    out.padded = true;
    Rng fill = rng.split("span-padding");
    Mat random(d, k - keep);
    for (Eigen::Index j = 0; j < random.cols(); ++j) {
      for (int i = 0; i < d; ++i) random(i, j) = fill.normal();
    }
    const Mat Q = basis.leftCols(keep);
    random -= Q * (Q.transpose() * random);
    Eigen::HouseholderQR<Mat> qr(random);
    basis.rightCols(k - keep) = qr.householderQ() * Mat::Identity(d, k - keep);
  }
  out.basis = std::move(basis);
  return out;
}

SubspaceEstimate estimate_span(const Dataset& dataset, int k, const Rng& rng, const SpanOptions& opts) {
  if (dataset.size() < opts.probes) throw std::invalid_argument("estimate_span: dataset smaller than probe count");
  return estimate_span(KernelEstimator(dataset), k, rng, opts);
}

SubspaceEstimate basis_of(const Mat& M, const std::string& method) {
  if (M.cols() == 0 || M.cols() > M.rows()) throw std::invalid_argument("basis_of: need 1 <= k <= d");
  Eigen::HouseholderQR<Mat> qr(M);
  SubspaceEstimate out;
  out.basis = qr.householderQ() * Mat::Identity(M.rows(), M.cols());
  out.method = method;
  return out;
}

std::vector<double> principal_angles(const Mat& A, const Mat& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) throw std::invalid_argument("principal_angles: shape mismatch");
  check_orthonormal(A, "principal_angles");
  check_orthonormal(B, "principal_angles");
  const Mat C = A.transpose() * B;
  const Vec cosines = Eigen::JacobiSVD<Mat>(C).singularValues();  // descending
  const Mat residual = B - A * C;
  const Vec sines = Eigen::JacobiSVD<Mat>(residual).singularValues();  // descending
  const auto k = cosines.size();
  std::vector<double> angles(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    const double c = std::clamp(cosines(i), 0.0, 1.0);
    // the i-th largest cosine pairs with the i-th smallest sine
    const double s = std::clamp(sines(k - 1 - i), 0.0, 1.0);
    angles[static_cast<std::size_t>(i)] = c * c >= 0.5 ? std::asin(s) : std::acos(c);
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

std::vector<double> principal_angles(const SubspaceEstimate& A, const SubspaceEstimate& B) {
  return principal_angles(A.basis, B.basis);
}

Projection project(const SubspaceEstimate& basis, const Vec& x) {
  if (basis.basis.rows() != x.size()) throw std::invalid_argument("project: dimension mismatch");
  Projection p;
  p.coords = basis.basis.transpose() * x;
  p.full = basis.basis * p.coords;
  return p;
}

AngleBudget angle_budget(double theta, int k, double kappa, double u0, double delta) {
  if (theta < 0.0 || k < 1 || !(kappa > 0.0) || !(u0 > 0.0) || !(delta > 0.0)) {
    throw std::invalid_argument("angle_budget: inputs must be positive");
  }
  AngleBudget b;
  b.theta = theta;
  const double a1 = 2.0 * std::asin(std::min(1.0, std::sqrt(3.0) * kappa / (8.0 * k)));
  const double a2 = 2.0 * std::asin(std::min(1.0, delta * delta / (4.0 * k)));
  b.theta_star = std::min({a1, a2, u0 * kappa});
  const double shrink = 4.0 * k * std::sin(theta / 2.0);
  if (kappa * kappa >= shrink * shrink) b.kappa_prime = std::sqrt(kappa * kappa - shrink * shrink);
  b.feasible = theta <= b.theta_star && b.kappa_prime.has_value();
  return b;
}

double inner_product_distortion_bound(double theta, int k) { return 4.0 * k * std::sin(theta / 2.0); }

double projection_residual_bound(double theta, int k) { return 2.0 * std::sqrt(k * std::sin(theta / 2.0)); }

}  // namespace gradclust
