#pragma once

// Shared error types, numeric helpers, and constants used across the library.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace belplan {

// Any density consumed inside a log is floored at this value first, so
// zero-likelihood particles yield large-magnitude finite terms instead of NaN.
inline constexpr double kDensityFloor = 1e-300;

struct PlanningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AllWeightsZero : PlanningError {
  AllWeightsZero() : PlanningError("all particle weights are zero") {}
};

struct ZeroLikelihoodObservation : PlanningError {
  ZeroLikelihoodObservation()
      : PlanningError("observation has zero likelihood under every particle") {}
};

struct NonpositiveLikelihood : PlanningError {
  NonpositiveLikelihood()
      : PlanningError("nonpositive term inside a log after flooring") {}
};

struct AlreadyAtMaxLevel : PlanningError {
  AlreadyAtMaxLevel() : PlanningError("bounds already at the maximum level") {}
};

struct UnboundedDensity : PlanningError {
  UnboundedDensity() : PlanningError("model has no finite density supremum") {}
};

struct NonPSDCovariance : PlanningError {
  NonPSDCovariance() : PlanningError("covariance is not positive definite") {}
};

struct DegenerateBandwidth : PlanningError {
  DegenerateBandwidth()
      : PlanningError("sample variance is zero; KDE bandwidth undefined") {}
};

struct ConsistencyViolation : PlanningError {
  using PlanningError::PlanningError;
};

// Compensated (Kahan-Neumaier) accumulator. The bracketing and
// incremental-equals-scratch invariants are asserted at 1e-10 while the
// summed terms span many orders of magnitude, so plain summation is not enough.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double floored_log(double density) {
  return std::log(density < kDensityFloor ? kDensityFloor : density);
}

}  // namespace belplan
