#ifndef PAIRLOCK_GRADCHECK_HPP
#define PAIRLOCK_GRADCHECK_HPP

#include <functional>
#include <string>
#include <vector>

#include "pairlock/tensor.hpp"

namespace pairlock {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::vector<std::pair<std::string, double>> per_param;  // max rel error per tensor
};

// Compares the analytic gradients already stored in params (the caller runs
// its backward pass first) against central finite differences of `forward`,
// coordinate by coordinate. `forward` must be deterministic (dropout off).
GradCheckReport gradient_check(const std::function<double()>& forward, ParamSet& params,
                               double h = 1e-6);

}  // namespace pairlock

#endif  // PAIRLOCK_GRADCHECK_HPP
