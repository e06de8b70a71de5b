#pragma once

#include <cstdint>
#include <vector>

#include "gradclust/model.hpp"
#include "gradclust/rng.hpp"

namespace gradclust {

enum class Seeding { farthest_point, kmeanspp };

struct KMeansOptions {
  bool antipodal = false;  // identify v with -v
  int max_iter = 200;
  double tol = 1e-8;
  Seeding seeding = Seeding::farthest_point;
  unsigned threads = 1;
};

struct ClusterResult {
  Mat centers;  // d x k, unit columns
  std::vector<int> assignments;
  double inertia = 0.0;  // sum of 1 - cos (1 - |cos| when antipodal)
  std::vector<double> inertia_history;
  int iterations = 0;
  std::uint64_t seed = 0;
  bool antipodal = false;
};

/// Spherical k-means on the rows of `points` (unit vectors).
///
/// Farthest-point seeding starts from the point best aligned with the data's
/// principal direction and then greedily adds the point with the largest
/// dissimilarity to the chosen centers. It is deterministic and invariant to
/// duplicating the data; kmeans++ seeding draws from `rng` instead.
ClusterResult spherical_kmeans(const Mat& points, int k, const Rng& rng, const KMeansOptions& opts = {});

struct MatchReport {
  std::vector<int> permutation;  // permutation[l] = center matched to truth column l
  std::vector<int> signs;
  std::vector<double> per_vector_error;  // ||s_l c_{perm[l]} - w^l||
  double max_error = 0.0;
  double mean_error = 0.0;
  double total_cost = 0.0;
  bool sign_invariant = false;
};

/// Optimal one-to-one matching of centers (d x k) to truth columns (d x k).
MatchReport match_to_truth(const Mat& centers, const Mat& truth, bool sign_invariant);

/// Minimum-cost perfect matching on a square cost matrix. Returns row -> column.
std::vector<int> hungarian(const Mat& cost);

}  // namespace gradclust
