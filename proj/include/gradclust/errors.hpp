#pragma once

#include <stdexcept>
#include <string>

namespace gradclust {

/// Invalid or mutually incompatible run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No gradient estimate cleared the norm threshold.
class EmptyCandidateSet : public std::runtime_error {
 public:
  EmptyCandidateSet(double threshold, double max_norm);
  double threshold() const { return threshold_; }
  double max_norm() const { return max_norm_; }

 private:
  double threshold_;
  double max_norm_;
};

}  // namespace gradclust
