#include "gradclust/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gradclust/parallel.hpp"

namespace gradclust {

namespace {

double similarity(double c, bool antipodal) { return antipodal ? std::abs(c) : c; }

Eigen::Index principal_point(const Mat& points, bool antipodal) {
  Vec direction;
  if (!antipodal) direction = points.colwise().sum().transpose();
  if (antipodal || direction.norm() < 1e-12 * static_cast<double>(points.rows())) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(points.transpose() * points);
    direction = eig.eigenvectors().col(eig.eigenvalues().size() - 1);
    antipodal = true;
  }
  const Vec score = points * direction;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < score.size(); ++i) {
    if (similarity(score(i), antipodal) > similarity(score(best), antipodal)) best = i;
  }
  return best;
}

Mat seed_centers(const Mat& points, int k, Rng& rng, const KMeansOptions& opts) {
  const Eigen::Index m = points.rows();
  Mat centers(points.cols(), k);
  Vec gap = Vec::Constant(m, std::numeric_limits<double>::infinity());

  Eigen::Index first = opts.seeding == Seeding::kmeanspp ? static_cast<Eigen::Index>(rng.below(m))
                                                         : principal_point(points, opts.antipodal);
  centers.col(0) = points.row(first).transpose();
  for (int c = 1; c < k; ++c) {
    const Vec cos = points * centers.col(c - 1);
    for (Eigen::Index i = 0; i < m; ++i) gap(i) = std::min(gap(i), 1.0 - similarity(cos(i), opts.antipodal));
    Eigen::Index pick = 0;
    if (opts.seeding == Seeding::kmeanspp && gap.sum() > 0.0) {
      double target = rng.uniform() * gap.sum();
      pick = m - 1;
      for (Eigen::Index i = 0; i < m; ++i) {
        target -= gap(i);
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      for (Eigen::Index i = 1; i < m; ++i) {
        if (gap(i) > gap(pick)) pick = i;
      }
    }
    centers.col(c) = points.row(pick).transpose();
  }
  return centers;
}

}  // namespace

ClusterResult spherical_kmeans(const Mat& points, int k, const Rng& rng, const KMeansOptions& opts) {
  const Eigen::Index m = points.rows();
  if (k < 1) throw std::invalid_argument("spherical_kmeans: k must be positive");
  if (m < k) throw std::invalid_argument("spherical_kmeans: fewer candidates than clusters");
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::abs(points.row(i).norm() - 1.0) > 1e-8) throw std::invalid_argument("spherical_kmeans: non-unit input");
  }

  ClusterResult res;
  res.seed = rng.key();
  res.antipodal = opts.antipodal;
  Rng local = rng;
  Mat centers = seed_centers(points, k, local, opts);
  std::vector<int> assign(static_cast<std::size_t>(m), 0);
  Vec best_sim(m);

  auto assign_all = [&] {
    const Mat cos = points * centers;  // m x k
    parallel_chunks(static_cast<std::size_t>(m), 1024, opts.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        int arg = 0;
        double top = similarity(cos(r, 0), opts.antipodal);
        for (int c = 1; c < k; ++c) {
          const double s = similarity(cos(r, c), opts.antipodal);
          if (s > top) {
            top = s;
            arg = c;
          }
        }
        assign[i] = arg;
        best_sim(r) = top;
      }
    });
    // An empty cluster takes the point that is worst served by its own center.
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int a : assign) ++counts[static_cast<std::size_t>(a)];
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index worst = -1;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])] <= 1) continue;
        if (worst < 0 || best_sim(i) < best_sim(worst)) worst = i;
      }
      if (worst < 0) continue;
      --counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(worst)])];
      ++counts[static_cast<std::size_t>(c)];
      assign[static_cast<std::size_t>(worst)] = c;
      centers.col(c) = points.row(worst).transpose();
      best_sim(worst) = 1.0;
    }
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) inertia += 1.0 - best_sim(i);
    return inertia;
  };

  auto update = [&] {
    Mat sums = Mat::Zero(points.cols(), k);
    for (Eigen::Index i = 0; i < m; ++i) {
      const int c = assign[static_cast<std::size_t>(i)];
      double sign = 1.0;
      if (opts.antipodal && points.row(i).dot(centers.col(c)) < 0.0) sign = -1.0;
      sums.col(c) += sign * points.row(i).transpose();
    }
    for (int c = 0; c < k; ++c) {
      const double n = sums.col(c).norm();
      if (n > 0.0) centers.col(c) = sums.col(c) / n;
    }
  };

  for (int it = 1; it <= opts.max_iter; ++it) {
    const double inertia = assign_all();
    res.inertia_history.push_back(inertia);
    res.iterations = it;
    update();
    if (it > 1 && res.inertia_history[res.inertia_history.size() - 2] - inertia <= opts.tol) break;
  }

  double final_inertia = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double c = points.row(i).dot(centers.col(assign[static_cast<std::size_t>(i)]));
    final_inertia += 1.0 - similarity(c, opts.antipodal);
  }
  res.centers = std::move(centers);
  res.assignments = std::move(assign);
  res.inertia = std::max(0.0, final_inertia);
  return res;
}

// Shortest augmenting path formulation with row and column potentials.
std::vector<int> hungarian(const Mat& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw std::invalid_argument("hungarian: cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

MatchReport match_to_truth(const Mat& centers, const Mat& truth, bool sign_invariant) {
  if (centers.rows() != truth.rows() || centers.cols() != truth.cols()) {
    throw std::invalid_argument("match_to_truth: centers and truth shapes differ");
  }
  const int k = static_cast<int>(truth.cols());
  if (k > 64) throw std::invalid_argument("match_to_truth: k above 64");
  Mat cost(k, k);
  Eigen::MatrixXi sign(k, k);
  for (int l = 0; l < k; ++l) {
    for (int j = 0; j < k; ++j) {
      const double plus = (centers.col(j) - truth.col(l)).norm();
      const double minus = (centers.col(j) + truth.col(l)).norm();
      const bool flip = sign_invariant && minus < plus;
      cost(l, j) = flip ? minus : plus;
      sign(l, j) = flip ? -1 : 1;
    }
  }
  MatchReport rep;
  rep.sign_invariant = sign_invariant;
  rep.permutation = hungarian(cost);
  rep.signs.resize(static_cast<std::size_t>(k));
  rep.per_vector_error.resize(static_cast<std::size_t>(k));
  for (int l = 0; l < k; ++l) {
    const int j = rep.permutation[static_cast<std::size_t>(l)];
    rep.signs[static_cast<std::size_t>(l)] = sign(l, j);
    rep.per_vector_error[static_cast<std::size_t>(l)] = cost(l, j);
    rep.total_cost += cost(l, j);
    rep.max_error = std::max(rep.max_error, cost(l, j));
  }
  rep.mean_error = rep.total_cost / k;
  return rep;
}

}  // namespace gradclust
