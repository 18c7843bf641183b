#ifndef PAIRLOCK_TEST_HELPERS_HPP
#define PAIRLOCK_TEST_HELPERS_HPP

#include "pairlock/geometry.hpp"
#include "pairlock/rng.hpp"
#include "pairlock/tensor.hpp"

namespace pairlock::testing {

inline BoundingBox random_box(Rng& rng, double extent = 100.0, double min_side = 0.0) {
  const double x0 = rng.uniform(0.0, extent);
  const double y0 = rng.uniform(0.0, extent);
  return {x0, y0, x0 + min_side + rng.uniform(0.0, extent), y0 + min_side + rng.uniform(0.0, extent)};
}

inline Tensor random_tensor(Rng& rng, std::vector<int> shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace pairlock::testing

#endif
