#include "tall/gradcheck.hpp"

#include <cmath>

#include "tall/errors.hpp"

namespace tall {

double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  std::vector<double> point,
                  const std::vector<double>& analytic, double h) {
  if (h <= 0.0) throw ConfigError("grad_check: h must be positive");
  if (point.size() != analytic.size()) {
    throw DimensionError("grad_check: point/gradient size mismatch");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double orig = point[i];
    point[i] = orig + h;
    const double fp = f(point);
    point[i] = orig - h;
    const double fm = f(point);
    point[i] = orig;
    const double fd = (fp - fm) / (2.0 * h);
    const double g = analytic[i];
    const double rel = std::fabs(fd - g) / (std::fabs(fd) + std::fabs(g) + 1e-8);
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace tall
