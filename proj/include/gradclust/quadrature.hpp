#pragma once

#include <cstddef>
#include <vector>

namespace gradclust {

/// Gauss-Hermite rule in probabilists' form: E g(Z) ~ sum_i weight[i] * g(node[i])
/// for Z ~ N(0, 1).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  template <typename F>
  double expect(F&& g) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * g(nodes[i]);
    return acc;
  }
};

GaussHermiteRule gauss_hermite(std::size_t order);

/// Cached 64-node rule.
const GaussHermiteRule& default_hermite_rule();

double normal_cdf(double x);
double normal_pdf(double x);

}  // namespace gradclust
