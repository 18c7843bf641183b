#include "pairlock/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace pairlock {

GradCheckReport gradient_check(const std::function<double()>& forward, ParamSet& params, double h) {
  GradCheckReport report;
  for (const std::string& name : params.names()) {
    Param& p = params.at(name);
    double worst = 0.0;
    for (size_t i = 0; i < p.value.numel(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + h;
      const double f_plus = forward();
      p.value[i] = saved - h;
      const double f_minus = forward();
      p.value[i] = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double analytic = p.grad[i];
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      worst = std::max(worst, rel);
    }
    report.per_param.emplace_back(name, worst);
    report.max_rel_error = std::max(report.max_rel_error, worst);
  }
  return report;
}

}  // namespace pairlock
