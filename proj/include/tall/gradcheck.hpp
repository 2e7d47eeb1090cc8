#pragma once

#include <functional>
#include <vector>

namespace tall {

// Central finite-difference check: perturbs each coordinate of `point` by
// +/- h, compares against `analytic`, and returns the max over coordinates of
// |g_fd - g| / (|g_fd| + |g| + 1e-8).
double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  std::vector<double> point,
                  const std::vector<double>& analytic, double h);

}  // namespace tall
